#include "adoc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <string>

#include "adoc/error.hpp"

namespace adoc {

namespace {

// Relative tolerance under which two candidate route costs count as tied.
constexpr double kTieTolerance = 1e-9;

bool tied(double a, double b) { return std::abs(a - b) <= kTieTolerance * (1.0 + std::max(std::abs(a), std::abs(b))); }

std::vector<double> penalties_for(const CollocationSet& colloc, const Gmm& targets, const ObstacleMap& map) {
    std::vector<double> pen;
    pen.reserve(colloc.size() + targets.size());
    for (const auto& g : colloc.components()) pen.push_back(gaussian_map_inner(g, map));
    for (const auto& g : targets.components()) pen.push_back(gaussian_map_inner(g, map));
    return pen;
}

}  // namespace

CollocationSet::CollocationSet(std::vector<Gaussian2> components, double spacing)
    : components_(std::move(components)), spacing_(spacing) {
    if (components_.empty()) throw Error(ErrorCode::invalid_parameter, "empty collocation set");
    if (!(spacing_ > 0.0)) throw Error(ErrorCode::invalid_parameter, "collocation spacing must be positive");
    const Mat2& cov = components_.front().cov();
    for (const auto& g : components_) {
        if (g.cov() != cov) throw Error(ErrorCode::invalid_parameter, "collocation components must share a covariance");
    }
}

CollocationSet CollocationSet::uniform(const Roi& roi, double spacing, const Mat2& cov) {
    if (!(spacing > 0.0)) throw Error(ErrorCode::invalid_parameter, "collocation spacing must be positive");
    const int nx = static_cast<int>(std::floor(roi.lx / spacing + 1e-9));
    const int ny = static_cast<int>(std::floor(roi.ly / spacing + 1e-9));
    if (nx < 1 || ny < 1) throw Error(ErrorCode::invalid_parameter, "roi smaller than collocation spacing");
    std::vector<Gaussian2> comps;
    comps.reserve(static_cast<std::size_t>(nx * ny));
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) comps.emplace_back(Vec2((ix + 0.5) * spacing, (iy + 0.5) * spacing), cov);
    }
    return CollocationSet(std::move(comps), spacing);
}

PlannerGraph build_graph(const CollocationSet& colloc, const Gmm& targets, const std::vector<double>& penalties,
                         double d_th, double lambda_obs) {
    if (!(d_th > 0.0)) throw Error(ErrorCode::invalid_parameter, "d_th must be positive");
    if (d_th < colloc.spacing()) throw Error(ErrorCode::invalid_parameter, "d_th below collocation spacing");
    if (!(lambda_obs >= 0.0)) throw Error(ErrorCode::invalid_parameter, "lambda_obs must be non-negative");
    PlannerGraph g;
    g.n_colloc = colloc.size();
    g.n_targets = targets.size();
    if (penalties.size() != g.node_count()) throw Error(ErrorCode::invalid_parameter, "penalty vector size mismatch");
    g.d_th = d_th;
    g.lambda_obs = lambda_obs;
    g.nodes = colloc.components();
    g.nodes.insert(g.nodes.end(), targets.components().begin(), targets.components().end());
    g.penalty = penalties;
    g.out.assign(g.node_count(), {});
    const double d_th_sq = d_th * d_th;
    for (std::size_t u = 0; u < g.n_colloc; ++u) {
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            if (u == v) continue;
            const double c = w2_gaussian_sq(g.nodes[u], g.nodes[v]);
            if (c > d_th_sq) continue;
            g.out[u].push_back({v, c, c + lambda_obs * penalties[v]});
        }
    }
    return g;
}

PlannerGraph build_graph(const CollocationSet& colloc, const Gmm& targets, const ObstacleMap& map, double d_th,
                         double lambda_obs) {
    return build_graph(colloc, targets, penalties_for(colloc, targets, map), d_th, lambda_obs);
}

std::vector<std::size_t> ShortestPaths::path(std::size_t i, std::size_t j, std::size_t n_colloc) const {
    std::vector<std::size_t> out;
    if (!std::isfinite(cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))) return out;
    const std::size_t target = n_colloc + j;
    std::size_t node = i;
    out.push_back(node);
    while (node != target) {
        const long nxt = next[j][node];
        if (nxt < 0 || out.size() > next[j].size()) return {};
        node = static_cast<std::size_t>(nxt);
        out.push_back(node);
    }
    return out;
}

ShortestPaths shortest_costs_to_targets(const PlannerGraph& graph) {
    const std::size_t n = graph.node_count();
    struct InEdge {
        std::size_t tail;
        double w;
    };
    std::vector<std::vector<InEdge>> in(n);
    for (std::size_t u = 0; u < n; ++u) {
        for (const auto& e : graph.out[u]) {
            const bool terminal = e.head >= graph.n_colloc;
            in[e.head].push_back({u, terminal ? e.w2sq : e.weight});
        }
    }

    ShortestPaths sp;
    sp.cost = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(graph.n_colloc),
                                        static_cast<Eigen::Index>(graph.n_targets), kInf);
    sp.next.assign(graph.n_targets, std::vector<long>(n, -1));

    using Item = std::pair<double, std::size_t>;
    for (std::size_t j = 0; j < graph.n_targets; ++j) {
        const std::size_t t = graph.n_colloc + j;
        std::vector<double> dist(n, kInf);
        std::vector<char> done(n, 0);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[t] = 0.0;
        pq.push({0.0, t});
        while (!pq.empty()) {
            const auto [d, v] = pq.top();
            pq.pop();
            if (done[v]) continue;
            done[v] = 1;
            for (const auto& e : in[v]) {
                const double nd = d + e.w;
                if (nd < dist[e.tail]) {
                    dist[e.tail] = nd;
                    sp.next[j][e.tail] = static_cast<long>(v);
                    pq.push({nd, e.tail});
                }
            }
        }
        for (std::size_t i = 0; i < graph.n_colloc; ++i) {
            sp.cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dist[i];
        }
    }
    return sp;
}

ControlSolution solve_control_lp(const Gmm& current, const Gmm& targets, const CollocationSet& colloc,
                                 const PlannerGraph& graph, const ShortestPaths& ltilde, double omega_th) {
    const std::size_t nk = current.size();
    const std::size_t nc = colloc.size();
    const std::size_t nt = targets.size();
    if (graph.n_colloc != nc || graph.n_targets != nt) {
        throw Error(ErrorCode::invalid_parameter, "graph does not match collocation set and targets");
    }
    const double d_th_sq = graph.d_th * graph.d_th;

    // Route cost C(i, j) through the best first hop, and that hop.
    Eigen::MatrixXd route = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nt), kInf);
    std::vector<std::vector<long>> hop(nk, std::vector<long>(nt, -1));
    for (std::size_t i = 0; i < nk; ++i) {
        bool any_neighbor = false;
        for (std::size_t c = 0; c < nc; ++c) {
            const double w = w2_gaussian_sq(current.component(i), colloc.component(c));
            if (w > d_th_sq) continue;
            any_neighbor = true;
            const double l = w + graph.lambda_obs * graph.penalty[c];
            for (std::size_t j = 0; j < nt; ++j) {
                const double lt = ltilde.cost(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
                if (!std::isfinite(lt)) continue;
                const double total = l + lt;
                double& best = route(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                long& h = hop[i][j];
                bool take = false;
                if (h < 0) {
                    take = true;
                } else if (tied(total, best)) {
                    // Among equal routes prefer the hop that is closest to the target.
                    const double prev_lt = ltilde.cost(h, static_cast<Eigen::Index>(j));
                    take = lt < prev_lt;
                } else {
                    take = total < best;
                }
                if (take) {
                    best = total;
                    h = static_cast<long>(c);
                }
            }
        }
        if (!any_neighbor) {
            throw PlanInfeasible(i, "component " + std::to_string(i) + " has no collocation node within d_th");
        }
        if (std::all_of(hop[i].begin(), hop[i].end(), [](long v) { return v < 0; })) {
            throw PlanInfeasible(i, "component " + std::to_string(i) + " cannot reach any target");
        }
    }

    double max_finite = 0.0;
    for (Eigen::Index r = 0; r < route.rows(); ++r) {
        for (Eigen::Index c = 0; c < route.cols(); ++c) {
            if (std::isfinite(route(r, c))) max_finite = std::max(max_finite, route(r, c));
        }
    }
    const double big_m = 1e6 * (1.0 + max_finite);
    Eigen::MatrixXd cost = route.unaryExpr([big_m](double v) { return std::isfinite(v) ? v : big_m; });

    Eigen::VectorXd src(static_cast<Eigen::Index>(nk));
    for (std::size_t i = 0; i < nk; ++i) src(static_cast<Eigen::Index>(i)) = current.weight(i);
    Eigen::VectorXd snk(static_cast<Eigen::Index>(nt));
    for (std::size_t j = 0; j < nt; ++j) snk(static_cast<Eigen::Index>(j)) = targets.weight(j);

    const TransportPlan plan = solve_transport(cost, src, snk);

    ControlSolution sol{Gmm(current.component(0)), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nc)),
                        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nt)),
                        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc)), {}, 0.0};
    for (std::size_t i = 0; i < nk; ++i) {
        for (std::size_t j = 0; j < nt; ++j) {
            const double f = plan.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (f <= 0.0) continue;
            if (hop[i][j] < 0) {
                if (f > 1e-12) {
                    throw PlanInfeasible(i, "component " + std::to_string(i) + " must route mass to an unreachable target");
                }
                continue;
            }
            const auto c = static_cast<Eigen::Index>(hop[i][j]);
            sol.pi(static_cast<Eigen::Index>(i), c) += f;
            sol.pi_tilde(c, static_cast<Eigen::Index>(j)) += f;
            sol.predicted_cost += f * route(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    sol.middle = sol.pi.colwise().sum().transpose();

    std::vector<Gaussian2> comps;
    std::vector<double> weights;
    std::vector<std::size_t> nodes;
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        const double w = sol.middle(static_cast<Eigen::Index>(c));
        if (w <= 0.0) continue;
        comps.push_back(colloc.component(c));
        weights.push_back(w);
        nodes.push_back(c);
        total += w;
    }
    for (double& w : weights) w /= total;
    const Gmm raw(std::move(comps), std::move(weights));
    const double max_w = *std::max_element(raw.weights().begin(), raw.weights().end());
    if (omega_th < max_w) {
        sol.goal = prune_and_renormalize(raw, omega_th);
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (raw.weight(k) >= omega_th) sol.goal_nodes.push_back(nodes[k]);
        }
    } else {
        sol.goal = raw;
        sol.goal_nodes = nodes;
    }
    return sol;
}

std::vector<Gmm> interpolate_plan(const Gmm& current, const Gmm& goal, const TransportPlan& plan, double dbar) {
    if (!(dbar > 0.0)) throw Error(ErrorCode::invalid_parameter, "dbar must be positive");
    const Eigen::MatrixXd c = component_cost_matrix(current, goal);
    if (plan.matrix.rows() != c.rows() || plan.matrix.cols() != c.cols()) {
        throw Error(ErrorCode::invalid_parameter, "plan shape does not match mixtures");
    }
    const double d = std::sqrt(std::max(0.0, plan.matrix.cwiseProduct(c).sum()));
    const long steps = std::max(1L, static_cast<long>(std::ceil(d / dbar - 1e-9)));
    std::vector<Gmm> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (long s = 1; s < steps; ++s) {
        out.push_back(gmm_geodesic(current, goal, plan, static_cast<double>(s) / static_cast<double>(steps)));
    }
    out.push_back(goal);
    return out;
}

AdocPlanner::AdocPlanner(CollocationSet colloc, Gmm targets, PlannerConfig cfg)
    : colloc_(std::move(colloc)), targets_(std::move(targets)), cfg_(cfg) {
    if (!(cfg_.dbar > 0.0)) throw Error(ErrorCode::invalid_parameter, "dbar must be positive");
    if (cfg_.d_th < colloc_.spacing()) throw Error(ErrorCode::invalid_parameter, "d_th below collocation spacing");
}

void AdocPlanner::refresh_cache(const ObstacleMap& map) const {
    if (graph_ && cached_binary_ == map.binary()) return;
    const std::vector<std::uint8_t>& bin = map.binary();
    const std::size_t n_nodes = colloc_.size() + targets_.size();
    if (!graph_ || cached_binary_.size() != bin.size()) {
        cached_penalty_ = penalties_for(colloc_, targets_, map);
        graph_ = build_graph(colloc_, targets_, cached_penalty_, cfg_.d_th, cfg_.lambda_obs);
    } else {
        // Recompute only the nodes whose support window covers a flipped cell.
        std::vector<Vec2> flipped;
        for (std::size_t cell = 0; cell < bin.size(); ++cell) {
            if (bin[cell] != cached_binary_[cell]) flipped.push_back(map.center(cell));
        }
        for (std::size_t k = 0; k < n_nodes; ++k) {
            const Gaussian2& g = graph_->nodes[k];
            const double hx = 8.0 * std::sqrt(g.cov()(0, 0)) + map.spacing();
            const double hy = 8.0 * std::sqrt(g.cov()(1, 1)) + map.spacing();
            const bool touched = std::any_of(flipped.begin(), flipped.end(), [&](const Vec2& p) {
                return std::abs(p.x() - g.mean().x()) <= hx && std::abs(p.y() - g.mean().y()) <= hy;
            });
            if (touched) cached_penalty_[k] = gaussian_map_inner(g, map);
        }
        graph_->penalty = cached_penalty_;
        for (auto& edges : graph_->out) {
            for (auto& e : edges) e.weight = e.w2sq + cfg_.lambda_obs * cached_penalty_[e.head];
        }
    }
    cached_binary_ = bin;
    paths_ = shortest_costs_to_targets(*graph_);
}

ControlSolution AdocPlanner::solve(const Gmm& from, const ObstacleMap& map) const {
    refresh_cache(map);
    return solve_control_lp(from, targets_, colloc_, *graph_, *paths_, cfg_.omega_th);
}

bool AdocPlanner::relevant_change(const PlanState& state, const ObstacleMap& map) const {
    const auto& bin = map.binary();
    if (state.planned_binary.size() != bin.size()) return true;
    std::vector<Vec2> means;
    auto add = [&means](const Gmm& m) {
        for (const auto& g : m.components()) means.push_back(g.mean());
    };
    add(state.current_pdf);
    add(state.goal_pdf);
    for (const auto& m : state.interp_queue) add(m);
    const double r2 = cfg_.d_th * cfg_.d_th;
    for (std::size_t cell = 0; cell < bin.size(); ++cell) {
        if (bin[cell] == state.planned_binary[cell]) continue;
        const Vec2 p = map.center(cell);
        for (const auto& mu : means) {
            if ((p - mu).squaredNorm() <= r2) return true;
        }
    }
    return false;
}

namespace {

bool same_mixture(const Gmm& a, const Gmm& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a.component(i) == b.component(i))) return false;
        if (std::abs(a.weight(i) - b.weight(i)) > kWeightSumTolerance) return false;
    }
    return true;
}

// The LP can settle on the mixture it started from once every component sits
// on its best node; the remaining approach is then made directly.
Gmm effective_goal(const ControlSolution& sol, const Gmm& from, const Gmm& targets) {
    if (same_mixture(sol.goal, from)) return targets;
    return sol.goal;
}

}  // namespace

void AdocPlanner::start_segment(PlanState& state, const ObstacleMap& map) const {
    ControlSolution sol = solve(state.current_pdf, map);
    state.lp_solved = true;
    state.replanned = true;
    state.goal_pdf = effective_goal(sol, state.current_pdf, targets_);
    state.anchor_pdf = state.current_pdf;
    state.predicted_cost = sol.predicted_cost;
    state.last_solution = std::move(sol);
    const auto [d, plan] = wg_metric(state.current_pdf, state.goal_pdf);
    (void)d;
    const std::vector<Gmm> seq = interpolate_plan(state.current_pdf, state.goal_pdf, plan, cfg_.dbar);
    state.interp_queue.assign(seq.begin(), seq.end());
    state.planned_binary = map.binary();
}

PlanState AdocPlanner::step(PlanState state, const ObstacleMap& map) const {
    state.lp_solved = false;
    state.replanned = false;
    if (state.terminal) return state;
    if (wg_metric(state.current_pdf, targets_).first <= cfg_.dbar) {
        state.terminal = true;
        state.interp_queue.clear();
        return state;
    }
    if (state.interp_queue.empty()) {
        start_segment(state, map);
    } else if (cfg_.mode == ReplanMode::every_step || relevant_change(state, map)) {
        ControlSolution sol = solve(state.anchor_pdf, map);
        state.lp_solved = true;
        const Gmm goal = effective_goal(sol, state.anchor_pdf, targets_);
        if (same_mixture(goal, state.goal_pdf)) {
            state.planned_binary = map.binary();
            state.predicted_cost = sol.predicted_cost;
            state.last_solution = std::move(sol);
        } else {
            start_segment(state, map);
        }
    }
    state.current_pdf = state.interp_queue.front();
    state.interp_queue.pop_front();
    ++state.step;
    return state;
}

PlanState plan_step(const PlanState& state, const ObstacleMap& map, const AdocPlanner& planner) {
    return planner.step(state, map);
}

}  // namespace adoc
