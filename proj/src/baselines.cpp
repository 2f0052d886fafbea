#include "adoc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <tuple>

#include "adoc/error.hpp"

namespace adoc {

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double l2 = ab.squaredNorm();
    if (l2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / l2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

double path_occupied(const ObstacleMap& map, const Vec2& start, const std::vector<Vec2>& path) {
    double acc = 0.0;
    Vec2 prev = start;
    for (const auto& w : path) {
        acc += occupied_length(map, prev, w);
        prev = w;
    }
    return acc;
}

}  // namespace

std::size_t TargetAssignment::claimed_count() const {
    return static_cast<std::size_t>(std::count(claimed.begin(), claimed.end(), 1));
}

TargetAssignment sample_targets(const Gmm& target_pdf, std::size_t n, const GroundTruthWorld& world, Rng& rng) {
    TargetAssignment a;
    a.targets.reserve(n);
    long rejected = 0;
    while (a.targets.size() < n) {
        const Vec2 p = sample_gmm(target_pdf, rng);
        if (!world.roi().contains(p) || world.occupied(p)) {
            if (++rejected > 1000000) {
                throw Error(ErrorCode::infeasible_initial_distribution, "target sampling rejected too many draws");
            }
            continue;
        }
        a.targets.push_back(p);
    }
    a.claimed.assign(n, 0);
    return a;
}

void pair_greedy(TargetAssignment& assign, const std::vector<Vec2>& positions) {
    const std::size_t nr = positions.size();
    const std::size_t nt = assign.targets.size();
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    pairs.reserve(nr * nt);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t t = 0; t < nt; ++t) pairs.emplace_back((positions[r] - assign.targets[t]).squaredNorm(), r, t);
    }
    std::sort(pairs.begin(), pairs.end());
    assign.paired.assign(nr, -1);
    std::vector<char> used(nt, 0);
    std::size_t done = 0;
    for (const auto& [d, r, t] : pairs) {
        if (done == std::min(nr, nt)) break;
        if (assign.paired[r] >= 0 || used[t]) continue;
        assign.paired[r] = static_cast<long>(t);
        used[t] = 1;
        ++done;
    }
}

Vec2 baseline_velocity(const Vec2& attract_grad, const Vec2& repulse_grad, const BaselineConfig& cfg) {
    Vec2 u = Vec2::Zero();
    const double a = attract_grad.norm();
    if (a > 0.0) u = -cfg.v_rob * attract_grad / a;
    u -= cfg.micro.repulse_gain * repulse_grad;
    return saturate(u, cfg.micro.v_max);
}

SwarmState pdf_apf_step(const SwarmState& swarm, const Gmm& target_pdf, const ObstacleMap& map,
                        const BaselineConfig& cfg, double dt) {
    const auto ga = attractive_gradient(swarm.positions, target_pdf, cfg.micro.gamma, cfg.micro.bandwidth);
    const auto gr = repulsive_gradient(swarm.positions, map, cfg.micro.rho_obs, cfg.micro.rho_rob, cfg.micro.max_repulsion);
    std::vector<Vec2> u(swarm.positions.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = baseline_velocity(ga[i], gr[i], cfg);
    return apply_controls(swarm, u, dt, map.roi());
}

double sapf_potential(const Vec2& x, const TargetAssignment& assign, double min_distance) {
    double u = 0.0;
    for (std::size_t t = 0; t < assign.targets.size(); ++t) {
        if (assign.claimed[t]) continue;
        const double r = std::max((x - assign.targets[t]).norm(), min_distance);
        u -= 1.0 / (r * r);
    }
    return u;
}

Vec2 sapf_gradient(const Vec2& x, const TargetAssignment& assign, double min_distance) {
    Vec2 g = Vec2::Zero();
    for (std::size_t t = 0; t < assign.targets.size(); ++t) {
        if (assign.claimed[t]) continue;
        const Vec2 d = x - assign.targets[t];
        const double r2 = d.squaredNorm();
        if (r2 < min_distance * min_distance) continue;
        g += 2.0 * d / (r2 * r2);
    }
    return g;
}

void update_claims(TargetAssignment& assign, const std::vector<Vec2>& positions, double claim_radius) {
    const double r2 = claim_radius * claim_radius;
    for (std::size_t t = 0; t < assign.targets.size(); ++t) {
        if (assign.claimed[t]) continue;
        for (const auto& p : positions) {
            if ((p - assign.targets[t]).squaredNorm() <= r2) {
                assign.claimed[t] = 1;
                break;
            }
        }
    }
}

SwarmState sapf_step(const SwarmState& swarm, TargetAssignment& assign, const ObstacleMap& map,
                     const BaselineConfig& cfg, double dt) {
    update_claims(assign, swarm.positions, cfg.claim_radius);
    const auto gr = repulsive_gradient(swarm.positions, map, cfg.micro.rho_obs, cfg.micro.rho_rob, cfg.micro.max_repulsion);
    std::vector<Vec2> u(swarm.positions.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = baseline_velocity(sapf_gradient(swarm.positions[i], assign, cfg.min_attract_distance), gr[i], cfg);
    }
    return apply_controls(swarm, u, dt, map.roi());
}

SppRoadmap::SppRoadmap(const CollocationSet& colloc, const std::vector<Vec2>& targets, double d_th, double penalty)
    : n_colloc_(colloc.size()), d_th_(d_th), penalty_(penalty) {
    if (!(d_th > 0.0)) throw Error(ErrorCode::invalid_parameter, "d_th must be positive");
    if (!(penalty >= 0.0)) throw Error(ErrorCode::invalid_parameter, "penalty must be non-negative");
    for (const auto& g : colloc.components()) nodes_.push_back(g.mean());
    nodes_.insert(nodes_.end(), targets.begin(), targets.end());
    out_.assign(nodes_.size(), {});
    for (std::size_t u = 0; u < nodes_.size(); ++u) {
        for (std::size_t v = 0; v < nodes_.size(); ++v) {
            if (u != v && (nodes_[u] - nodes_[v]).norm() <= d_th_) out_[u].push_back({v, 0.0});
        }
    }
}

double SppRoadmap::segment_cost(const ObstacleMap& map, const Vec2& a, const Vec2& b) const {
    return (b - a).norm() + penalty_ * occupied_length(map, a, b);
}

void SppRoadmap::refresh(const ObstacleMap& map) const {
    const auto& bin = map.binary();
    if (cached_binary_ == bin) return;
    const bool full = cached_binary_.size() != bin.size();
    std::vector<Vec2> flipped;
    if (!full) {
        for (std::size_t c = 0; c < bin.size(); ++c) {
            if (bin[c] != cached_binary_[c]) flipped.push_back(map.center(c));
        }
    }
    const double reach = map.spacing();
    for (std::size_t u = 0; u < nodes_.size(); ++u) {
        for (auto& e : out_[u]) {
            const Vec2& a = nodes_[u];
            const Vec2& b = nodes_[e.head];
            const bool touched = full || std::any_of(flipped.begin(), flipped.end(), [&](const Vec2& p) {
                return point_segment_distance(p, a, b) <= reach;
            });
            if (touched) e.cost = segment_cost(map, a, b);
        }
    }
    cached_binary_ = bin;
}

std::vector<std::size_t> SppRoadmap::plan_nodes(const ObstacleMap& map, const Vec2& start, std::size_t t,
                                                double* cost) const {
    refresh(map);
    const std::size_t goal = target_node(t);
    if (goal >= nodes_.size()) throw Error(ErrorCode::out_of_range, "target index out of range");
    const std::size_t n = nodes_.size();
    std::vector<double> dist(n, kInf);
    std::vector<long> prev(n, -1);
    std::vector<char> done(n, 0);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (std::size_t v = 0; v < n; ++v) {
        if ((nodes_[v] - start).norm() > d_th_) continue;
        dist[v] = segment_cost(map, start, nodes_[v]);
        pq.push({dist[v], v});
    }
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (u == goal) break;
        for (const auto& e : out_[u]) {
            const double nd = d + e.cost;
            if (nd < dist[e.head]) {
                dist[e.head] = nd;
                prev[e.head] = static_cast<long>(u);
                pq.push({nd, e.head});
            }
        }
    }
    if (!std::isfinite(dist[goal])) throw Error(ErrorCode::path_infeasible, "target unreachable on the roadmap");
    std::vector<std::size_t> seq;
    for (long v = static_cast<long>(goal); v >= 0; v = prev[static_cast<std::size_t>(v)]) {
        seq.push_back(static_cast<std::size_t>(v));
    }
    std::reverse(seq.begin(), seq.end());
    if (cost) *cost = dist[goal];
    return seq;
}

std::vector<Vec2> SppRoadmap::plan(const ObstacleMap& map, const Vec2& start, std::size_t t) const {
    if (start == nodes_.at(target_node(t))) return {};
    std::vector<Vec2> out;
    for (std::size_t v : plan_nodes(map, start, t)) out.push_back(nodes_[v]);
    return out;
}

void spp_plan(SppState& state, const std::vector<Vec2>& positions, const SppRoadmap& roadmap, const ObstacleMap& map) {
    const std::size_t n = positions.size();
    if (state.assign.paired.size() != n) pair_greedy(state.assign, positions);
    state.paths.assign(n, {});
    state.planned_occupied.assign(n, 0.0);
    state.infeasible.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const long t = state.assign.paired[r];
        if (t < 0) continue;
        try {
            state.paths[r] = roadmap.plan(map, positions[r], static_cast<std::size_t>(t));
            state.planned_occupied[r] = path_occupied(map, positions[r], state.paths[r]);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::path_infeasible) throw;
            state.infeasible[r] = 1;
        }
    }
    state.planned_version = map.version();
    state.initialized = true;
}

SwarmState spp_step(const SwarmState& swarm, SppState& state, const SppRoadmap& roadmap, const ObstacleMap& map,
                    const BaselineConfig& cfg, double dt) {
    const auto& pos = swarm.positions;
    if (!state.initialized) {
        spp_plan(state, pos, roadmap, map);
    } else if (map.version() != state.planned_version) {
        for (std::size_t r = 0; r < pos.size(); ++r) {
            const long t = state.assign.paired[r];
            if (t < 0) continue;
            const bool blocked = !state.paths[r].empty() &&
                                 path_occupied(map, pos[r], state.paths[r]) > state.planned_occupied[r] + 1e-12;
            if (!blocked && !state.infeasible[r]) continue;
            try {
                state.paths[r] = roadmap.plan(map, pos[r], static_cast<std::size_t>(t));
                state.planned_occupied[r] = path_occupied(map, pos[r], state.paths[r]);
                state.infeasible[r] = 0;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::path_infeasible) throw;
                state.paths[r].clear();
                state.infeasible[r] = 1;
            }
        }
        state.planned_version = map.version();
    }

    const auto gr = repulsive_gradient(pos, map, cfg.micro.rho_obs, cfg.micro.rho_rob, cfg.micro.max_repulsion);
    std::vector<Vec2> u(pos.size(), Vec2::Zero());
    const double hop = cfg.v_rob * dt;
    for (std::size_t r = 0; r < pos.size(); ++r) {
        auto& path = state.paths[r];
        while (!path.empty() && (path.front() - pos[r]).norm() <= cfg.arrive_radius && path.size() > 1) {
            path.erase(path.begin());
        }
        if (path.size() == 1 && (path.front() - pos[r]).norm() <= cfg.arrive_radius * 0.2) path.clear();
        Vec2 v = Vec2::Zero();
        if (!path.empty()) {
            const Vec2 d = path.front() - pos[r];
            const double len = d.norm();
            v = len <= hop ? Vec2(d / dt) : Vec2(cfg.v_rob * d / len);
        }
        if (state.infeasible[r]) v = Vec2::Zero();
        u[r] = saturate(v - cfg.micro.repulse_gain * gr[r], cfg.micro.v_max);
    }
    return apply_controls(swarm, u, dt, map.roi());
}

}  // namespace adoc
