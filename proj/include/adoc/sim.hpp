#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "adoc/baselines.hpp"
#include "adoc/micro_control.hpp"
#include "adoc/planner.hpp"
#include "adoc/scenario.hpp"
#include "adoc/world_map.hpp"

namespace adoc {

/// (J/kg) per (km/h)^2.
inline constexpr double kEta = (1000.0 / 3600.0) * (1000.0 / 3600.0);

using Trajectory = std::vector<std::vector<Vec2>>;   ///< positions per step, index = step

struct StepRecord {
    long step = 0;
    double d_to_targ = 0.0;
    std::size_t new_cells = 0;
    bool lp_solved = false;
    double e_cum = 0.0;
    std::uint64_t digest = 0;
    double wall_ms = 0.0;
};

using SparseEntries = std::vector<std::tuple<int, int, double>>;

/// What the ADOC planner commanded at one step.
struct PlanTrace {
    long step = 0;
    bool lp_solved = false;
    bool replanned = false;
    double predicted_cost = 0.0;
    Gmm commanded;
    Gmm goal;
    std::vector<std::size_t> goal_nodes;
    SparseEntries pi;
    SparseEntries pi_tilde;
};

struct MapSnapshot {
    long step = 0;
    std::vector<std::uint8_t> binary;
};

enum class RunStatus { completed, hit_cap };

struct RunRecord {
    ScenarioConfig cfg;
    std::vector<StepRecord> steps;      ///< one row per step 0..T_f
    Trajectory trajectory;              ///< positions at steps 0..T_f
    std::vector<PlanTrace> plans;       ///< ADOC only, steps 1..T_f
    std::vector<MapSnapshot> maps;
    std::vector<std::string> events;    ///< planner infeasibility and similar notes
    int map_nx = 0;
    int map_ny = 0;
    long T_f = 0;
    double D0 = 0.0;
    double E_Tf = 0.0;
    bool completed = false;
    RunStatus status = RunStatus::hit_cap;
    double wall_seconds = 0.0;
};

/// (1/N) sum_n sum_{tau=k}^{T_f-1} |x_n(tau+1) - x_n(tau)|, T_f = traj.size() - 1.
[[nodiscard]] double distance_to_go(const Trajectory& traj, long k);
[[nodiscard]] double distance_to_go(const RunRecord& record, long k);

/// (eta / 2N) sum_n sum_{tau=1}^{k} (|x_n(tau) - x_n(tau-1)| / dt)^2.
[[nodiscard]] double energy_per_kg(const Trajectory& traj, double dt, long k);
[[nodiscard]] double energy_per_kg(const RunRecord& record, long k);

/// FNV-1a over the raw bytes of the positions.
[[nodiscard]] std::uint64_t positions_digest(const std::vector<Vec2>& positions);

/// Fraction of robots within Mahalanobis distance `radius` of some target component.
[[nodiscard]] double fraction_at_target(const std::vector<Vec2>& positions, const Gmm& target, double radius);

/// Live state of one run. Construction is init_run: seeded sampling, map from the prior,
/// first observation and planner state.
class Simulation {
public:
    explicit Simulation(ScenarioConfig cfg);

    [[nodiscard]] const ScenarioConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const GroundTruthWorld& world() const noexcept { return world_; }
    [[nodiscard]] const ObstacleMap& map() const noexcept { return map_; }
    [[nodiscard]] const SwarmState& swarm() const noexcept { return swarm_; }
    [[nodiscard]] const std::optional<PlanState>& plan_state() const noexcept { return plan_; }
    [[nodiscard]] const std::optional<AdocPlanner>& planner() const noexcept { return planner_; }
    [[nodiscard]] const TargetAssignment& assignment() const noexcept;
    [[nodiscard]] long step_index() const noexcept { return swarm_.step; }

    /// Planner-specific completion test at the current state.
    [[nodiscard]] bool completed() const;
    /// Macroscopic distance d(p_k, p_targ) reported in the metrics.
    [[nodiscard]] double distance_to_target() const;

    /// plan -> control -> move -> sense. Returns the row for the new step.
    StepRecord advance();

    /// Runs to completion or the step cap.
    [[nodiscard]] RunRecord run();

    /// Newly occupied cells found by the initial observation.
    [[nodiscard]] std::size_t initial_new_cells() const noexcept { return initial_new_cells_; }

private:
    ScenarioConfig cfg_;
    GroundTruthWorld world_;
    std::vector<std::uint8_t> truth_;
    ObstacleMap map_;
    SwarmState swarm_;
    MicroConfig micro_;
    BaselineConfig base_;
    std::optional<AdocPlanner> planner_;
    std::optional<PlanState> plan_;
    TargetAssignment assign_;
    SppState spp_;
    std::optional<SppRoadmap> roadmap_;
    std::size_t initial_new_cells_ = 0;
    double e_cum_ = 0.0;
    std::optional<PlanTrace> last_trace_;
    std::vector<std::string> events_;
};

/// Construct the initial state (throws infeasible_initial_distribution / invalid_scenario).
[[nodiscard]] Simulation init_run(const ScenarioConfig& cfg);
[[nodiscard]] RunRecord run_sim(const ScenarioConfig& cfg);

}  // namespace adoc
