#include "adoc/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

#include "adoc/error.hpp"
#include "adoc/rng.hpp"

namespace adoc {

namespace {

constexpr long kMaxRejections = 1000000;

SparseEntries sparse(const Eigen::MatrixXd& m) {
    SparseEntries out;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (m(r, c) != 0.0) out.emplace_back(static_cast<int>(r), static_cast<int>(c), m(r, c));
        }
    }
    return out;
}

std::vector<Vec2> sample_positions(const ScenarioConfig& cfg, const GroundTruthWorld& world) {
    Rng rng(cfg.seed, RngStream::init);
    std::vector<Vec2> pos;
    pos.reserve(cfg.robots);
    long rejected = 0;
    while (pos.size() < cfg.robots) {
        const Vec2 p = sample_gmm(cfg.initial, rng);
        if (!world.roi().contains(p) || world.occupied(p)) {
            if (++rejected > kMaxRejections) {
                throw Error(ErrorCode::infeasible_initial_distribution,
                            "initial distribution rejected more than 10^6 samples");
            }
            continue;
        }
        pos.push_back(p);
    }
    return pos;
}

}  // namespace

double distance_to_go(const Trajectory& traj, long k) {
    if (traj.empty()) throw Error(ErrorCode::out_of_range, "empty trajectory");
    const long tf = static_cast<long>(traj.size()) - 1;
    if (k < 0 || k > tf) throw Error(ErrorCode::out_of_range, "step outside [0, T_f]");
    const std::size_t n = traj.front().size();
    double acc = 0.0;
    for (long t = k; t < tf; ++t) {
        for (std::size_t i = 0; i < n; ++i) acc += (traj[t + 1][i] - traj[t][i]).norm();
    }
    return acc / static_cast<double>(n);
}

double distance_to_go(const RunRecord& record, long k) { return distance_to_go(record.trajectory, k); }

double energy_per_kg(const Trajectory& traj, double dt, long k) {
    if (traj.empty()) throw Error(ErrorCode::out_of_range, "empty trajectory");
    const long tf = static_cast<long>(traj.size()) - 1;
    if (k < 0 || k > tf) throw Error(ErrorCode::out_of_range, "step outside [0, T_f]");
    const std::size_t n = traj.front().size();
    double acc = 0.0;
    for (long t = 1; t <= k; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (traj[t][i] - traj[t - 1][i]).norm() / dt;
            acc += v * v;
        }
    }
    return kEta / (2.0 * static_cast<double>(n)) * acc;
}

double energy_per_kg(const RunRecord& record, long k) { return energy_per_kg(record.trajectory, record.cfg.dt, k); }

std::uint64_t positions_digest(const std::vector<Vec2>& positions) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : positions) {
        for (int c = 0; c < 2; ++c) {
            unsigned char bytes[sizeof(double)];
            const double v = p[c];
            std::memcpy(bytes, &v, sizeof v);
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

double fraction_at_target(const std::vector<Vec2>& positions, const Gmm& target, double radius) {
    if (positions.empty()) return 0.0;
    std::vector<Mat2> inv;
    for (const auto& g : target.components()) inv.push_back(g.cov().inverse());
    const double r2 = radius * radius;
    std::size_t hits = 0;
    for (const auto& p : positions) {
        for (std::size_t c = 0; c < target.size(); ++c) {
            const Vec2 d = p - target.component(c).mean();
            if (d.dot(inv[c] * d) <= r2) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(positions.size());
}

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      world_((cfg_.validate(), cfg_.roi), cfg_.obstacles),
      map_(cfg_.roi, cfg_.grid_spacing, cfg_.prior_obstacles) {
    truth_ = map_.rasterize(world_);
    swarm_.positions = sample_positions(cfg_, world_);
    swarm_.controls.assign(swarm_.positions.size(), Vec2::Zero());
    swarm_.step = 0;

    micro_.gamma = cfg_.gamma;
    micro_.bandwidth = cfg_.bandwidth;
    micro_.rho_obs = cfg_.rho_obs;
    micro_.rho_rob = cfg_.rho_rob;
    micro_.v_max = cfg_.v_max;
    micro_.attract_gain = cfg_.attract_gain;
    micro_.repulse_gain = cfg_.repulse_gain;
    base_.micro = micro_;
    base_.v_rob = cfg_.v_rob;
    base_.claim_radius = cfg_.claim_radius;
    base_.d_th = cfg_.d_th;
    base_.spp_penalty = cfg_.spp_penalty;

    const ObserveResult first = map_.observe(truth_, FovSet{swarm_.positions, cfg_.fov_radius});
    initial_new_cells_ = first.flipped_to_occupied.size();

    const CollocationSet colloc =
        CollocationSet::uniform(cfg_.roi, cfg_.colloc_spacing, cfg_.colloc_variance * Mat2::Identity());
    switch (cfg_.planner) {
        case PlannerKind::adoc: {
            PlannerConfig pc;
            pc.d_th = cfg_.d_th;
            pc.dbar = cfg_.dbar;
            pc.omega_th = cfg_.omega_th;
            pc.lambda_obs = cfg_.lambda_obs;
            pc.mode = cfg_.replan_mode;
            planner_.emplace(colloc, cfg_.target, pc);
            plan_.emplace(cfg_.initial);
            break;
        }
        case PlannerKind::pdf_apf:
            break;
        case PlannerKind::sapf:
        case PlannerKind::spp: {
            Rng rng(cfg_.seed, RngStream::targets);
            assign_ = sample_targets(cfg_.target, cfg_.robots, world_, rng);
            if (cfg_.planner == PlannerKind::spp) {
                roadmap_.emplace(colloc, assign_.targets, cfg_.d_th, cfg_.spp_penalty);
                spp_.assign = assign_;
            }
            break;
        }
    }
}

const TargetAssignment& Simulation::assignment() const noexcept {
    return cfg_.planner == PlannerKind::spp ? spp_.assign : assign_;
}

double Simulation::distance_to_target() const {
    if (plan_) return wg_metric(plan_->current_pdf, cfg_.target).first;
    return wg_metric(kde_estimate(swarm_.positions, cfg_.bandwidth), cfg_.target).first;
}

bool Simulation::completed() const {
    const bool micro = fraction_at_target(swarm_.positions, cfg_.target, cfg_.completion_mahalanobis) >=
                       cfg_.completion_fraction;
    if (!micro) return false;
    if (plan_) return plan_->terminal || wg_metric(plan_->current_pdf, cfg_.target).first <= cfg_.dbar;
    return true;
}

StepRecord Simulation::advance() {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord row;
    last_trace_.reset();
    switch (cfg_.planner) {
        case PlannerKind::adoc: {
            bool hold = false;
            try {
                *plan_ = planner_->step(*plan_, map_);
            } catch (const PlanInfeasible& e) {
                events_.push_back("step " + std::to_string(swarm_.step + 1) + ": " + e.what());
                hold = true;
            }
            row.lp_solved = plan_->lp_solved;
            if (hold) {
                swarm_ = apply_controls(swarm_, std::vector<Vec2>(swarm_.positions.size(), Vec2::Zero()), cfg_.dt,
                                        map_.roi());
            } else {
                const auto u = adoc_controls(swarm_.positions, plan_->current_pdf, map_, micro_);
                swarm_ = apply_controls(swarm_, u, cfg_.dt, map_.roi());
            }
            PlanTrace tr{swarm_.step,           plan_->lp_solved, plan_->replanned, plan_->predicted_cost,
                         plan_->current_pdf,    plan_->goal_pdf,  {},               {},
                         {}};
            if (plan_->lp_solved && plan_->last_solution) {
                tr.goal_nodes = plan_->last_solution->goal_nodes;
                tr.pi = sparse(plan_->last_solution->pi);
                tr.pi_tilde = sparse(plan_->last_solution->pi_tilde);
            }
            last_trace_ = std::move(tr);
            break;
        }
        case PlannerKind::pdf_apf:
            swarm_ = pdf_apf_step(swarm_, cfg_.target, map_, base_, cfg_.dt);
            break;
        case PlannerKind::sapf:
            swarm_ = sapf_step(swarm_, assign_, map_, base_, cfg_.dt);
            break;
        case PlannerKind::spp:
            swarm_ = spp_step(swarm_, spp_, *roadmap_, map_, base_, cfg_.dt);
            break;
    }
    const ObserveResult obs = map_.observe(truth_, FovSet{swarm_.positions, cfg_.fov_radius});
    row.step = swarm_.step;
    row.new_cells = obs.flipped_to_occupied.size();
    row.d_to_targ = distance_to_target();
    row.digest = positions_digest(swarm_.positions);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

RunRecord Simulation::run() {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.cfg = cfg_;
    rec.map_nx = map_.nx();
    rec.map_ny = map_.ny();
    rec.trajectory.push_back(swarm_.positions);
    StepRecord first;
    first.step = 0;
    first.new_cells = initial_new_cells_;
    first.d_to_targ = distance_to_target();
    first.digest = positions_digest(swarm_.positions);
    rec.steps.push_back(first);
    rec.maps.push_back({0, map_.binary()});
    std::uint64_t snap_version = map_.version();

    bool done = completed();
    while (!done && swarm_.step < cfg_.max_steps) {
        const std::vector<Vec2> before = swarm_.positions;
        StepRecord row = advance();
        for (std::size_t i = 0; i < before.size(); ++i) {
            const double v = (swarm_.positions[i] - before[i]).norm() / cfg_.dt;
            e_cum_ += kEta / (2.0 * static_cast<double>(before.size())) * v * v;
        }
        row.e_cum = e_cum_;
        rec.steps.push_back(row);
        rec.trajectory.push_back(swarm_.positions);
        if (last_trace_) rec.plans.push_back(*last_trace_);
        if (swarm_.step % cfg_.persist_every == 0 && map_.version() != snap_version) {
            rec.maps.push_back({swarm_.step, map_.binary()});
            snap_version = map_.version();
        }
        done = completed();
    }
    if (rec.maps.back().step != swarm_.step) rec.maps.push_back({swarm_.step, map_.binary()});
    rec.T_f = swarm_.step;
    rec.completed = done;
    rec.status = done ? RunStatus::completed : RunStatus::hit_cap;
    rec.D0 = distance_to_go(rec.trajectory, 0);
    rec.E_Tf = energy_per_kg(rec.trajectory, cfg_.dt, rec.T_f);
    rec.events = events_;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

Simulation init_run(const ScenarioConfig& cfg) { return Simulation(cfg); }

RunRecord run_sim(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    return sim.run();
}

}  // namespace adoc
