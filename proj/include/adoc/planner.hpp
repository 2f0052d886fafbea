#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "adoc/gmm.hpp"
#include "adoc/transport.hpp"
#include "adoc/world_map.hpp"

namespace adoc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Fixed set of collocation Gaussians sharing one covariance.
class CollocationSet {
public:
    CollocationSet(std::vector<Gaussian2> components, double spacing);

    /// Means at ((ix + 0.5) s, (iy + 0.5) s) covering the roi, covariance `cov`.
    static CollocationSet uniform(const Roi& roi, double spacing, const Mat2& cov);

    [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
    [[nodiscard]] const std::vector<Gaussian2>& components() const noexcept { return components_; }
    [[nodiscard]] const Gaussian2& component(std::size_t i) const { return components_.at(i); }
    [[nodiscard]] double spacing() const noexcept { return spacing_; }

private:
    std::vector<Gaussian2> components_;
    double spacing_;
};

struct GraphEdge {
    std::size_t head;
    double w2sq;     ///< [W2(tail, head)]^2
    double weight;   ///< w2sq + lambda_obs * <g_head, m>
};

/// Directed graph over collocation nodes [0, N_c) followed by target nodes [N_c, N_c + N_targ).
/// Edges join pairs with W2 <= d_th; target nodes are sinks.
struct PlannerGraph {
    std::size_t n_colloc = 0;
    std::size_t n_targets = 0;
    double d_th = 0.0;
    double lambda_obs = 1.0;
    std::vector<Gaussian2> nodes;
    std::vector<double> penalty;                 ///< <g_node, m> per node
    std::vector<std::vector<GraphEdge>> out;     ///< outgoing edges per node, ascending head

    [[nodiscard]] std::size_t node_count() const noexcept { return n_colloc + n_targets; }
};

/// Graph from explicit per-node obstacle penalties (size N_c + N_targ).
[[nodiscard]] PlannerGraph build_graph(const CollocationSet& colloc, const Gmm& targets,
                                       const std::vector<double>& penalties, double d_th, double lambda_obs = 1.0);

/// Graph whose penalties are gaussian_map_inner against the map's binary view.
[[nodiscard]] PlannerGraph build_graph(const CollocationSet& colloc, const Gmm& targets, const ObstacleMap& map,
                                       double d_th, double lambda_obs = 1.0);

/// Cost-to-target table and the next hop of each cheapest path.
struct ShortestPaths {
    Eigen::MatrixXd cost;                   ///< N_c x N_targ, +inf when unreachable
    std::vector<std::vector<long>> next;    ///< next[j][i]: node after i toward target j, -1 if none

    /// Node sequence from collocation node i to target j (inclusive), empty if unreachable.
    [[nodiscard]] std::vector<std::size_t> path(std::size_t i, std::size_t j, std::size_t n_colloc) const;
};

/// One reverse Dijkstra per target. The hop into a target contributes only W2^2.
[[nodiscard]] ShortestPaths shortest_costs_to_targets(const PlannerGraph& graph);

/// Optimal point of the sparsified control LP.
struct ControlSolution {
    Gmm goal;                       ///< pruned, renormalized next mixture over collocation components
    Eigen::MatrixXd pi;             ///< N_k x N_c, rows sum to current weights
    Eigen::MatrixXd pi_tilde;       ///< N_c x N_targ, columns sum to target weights
    Eigen::VectorXd middle;         ///< shared marginal: column sums of pi == row sums of pi_tilde
    std::vector<std::size_t> goal_nodes;   ///< collocation index of each goal component
    double predicted_cost = 0.0;    ///< LP objective
};

/// Solves min sum L(i,c) pi(i,c) + sum Ltilde(c,j) pi_tilde(c,j) under the
/// source, sink and shared-middle marginal constraints, with pi(i,c) = 0 when
/// W2(current_i, colloc_c) > d_th. Throws PlanInfeasible naming the current
/// component that cannot reach any target.
[[nodiscard]] ControlSolution solve_control_lp(const Gmm& current, const Gmm& targets, const CollocationSet& colloc,
                                               const PlannerGraph& graph, const ShortestPaths& ltilde,
                                               double omega_th = kDefaultOmegaTh);

/// T_k = ceil(d / dbar) geodesic samples from current to goal; the last element is goal.
/// `plan` must be the optimal coupling of (current, goal).
[[nodiscard]] std::vector<Gmm> interpolate_plan(const Gmm& current, const Gmm& goal, const TransportPlan& plan,
                                                double dbar);

enum class ReplanMode { triggered, every_step };

struct PlannerConfig {
    double d_th = 4.0;
    double dbar = 0.05;
    double omega_th = kDefaultOmegaTh;
    double lambda_obs = 1.0;
    ReplanMode mode = ReplanMode::triggered;
};

struct PlanState {
    Gmm current_pdf;
    Gmm goal_pdf;
    Gmm anchor_pdf;                 ///< mixture the active segment was planned from
    std::deque<Gmm> interp_queue;
    double predicted_cost = kInf;
    std::vector<std::uint8_t> planned_binary;   ///< map view the active segment was checked against
    std::optional<ControlSolution> last_solution;
    bool terminal = false;
    bool lp_solved = false;         ///< an LP was solved during the last step
    bool replanned = false;         ///< the queue was rebuilt during the last step
    long step = 0;

    explicit PlanState(const Gmm& initial)
        : current_pdf(initial), goal_pdf(initial), anchor_pdf(initial) {}
};

/// Owns the collocation set, the target mixture and a graph cache keyed on the map version.
class AdocPlanner {
public:
    AdocPlanner(CollocationSet colloc, Gmm targets, PlannerConfig cfg);

    [[nodiscard]] const CollocationSet& collocation() const noexcept { return colloc_; }
    [[nodiscard]] const Gmm& targets() const noexcept { return targets_; }
    [[nodiscard]] const PlannerConfig& config() const noexcept { return cfg_; }

    /// Advance one macroscopic step: reuse the queue when nothing relevant changed,
    /// otherwise re-solve and, if the goal moved, re-interpolate from the current mixture.
    [[nodiscard]] PlanState step(PlanState state, const ObstacleMap& map) const;

    /// Graph + shortest paths + LP from `from` under `map`.
    [[nodiscard]] ControlSolution solve(const Gmm& from, const ObstacleMap& map) const;

    /// True when a binary flip since `planned` lies within d_th of any mean in the active plan.
    [[nodiscard]] bool relevant_change(const PlanState& state, const ObstacleMap& map) const;

private:
    void start_segment(PlanState& state, const ObstacleMap& map) const;
    void refresh_cache(const ObstacleMap& map) const;

    CollocationSet colloc_;
    Gmm targets_;
    PlannerConfig cfg_;

    // Cache of graph and shortest paths for the last seen map.
    mutable std::optional<std::uint64_t> cached_version_;
    mutable const ObstacleMap* cached_map_ = nullptr;
    mutable std::vector<std::uint8_t> cached_binary_;
    mutable std::vector<double> cached_penalty_;
    mutable std::optional<PlannerGraph> graph_;
    mutable std::optional<ShortestPaths> paths_;
};

/// Free-function form of AdocPlanner::step.
[[nodiscard]] PlanState plan_step(const PlanState& state, const ObstacleMap& map, const AdocPlanner& planner);

}  // namespace adoc
