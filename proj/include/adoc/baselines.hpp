#pragma once

#include <vector>

#include "adoc/micro_control.hpp"
#include "adoc/planner.hpp"
#include "adoc/rng.hpp"
#include "adoc/world_map.hpp"

namespace adoc {

struct BaselineConfig {
    MicroConfig micro;
    double v_rob = 5.0;                  ///< constant robot speed along the attractive direction (km/h)
    double claim_radius = 0.05;          ///< SAPF: a target is claimed once a robot is this close (km)
    double min_attract_distance = 0.001; ///< SAPF: inverse-square potential is capped below this range (km)
    double d_th = 4.0;                   ///< SPP: roadmap edge length limit (km)
    double spp_penalty = 1000.0;         ///< SPP: extra cost per km of occupied cells on an edge
    double arrive_radius = 0.05;         ///< SPP: waypoint reached within this distance (km)
};

struct TargetAssignment {
    std::vector<Vec2> targets;
    std::vector<long> paired;      ///< robot -> target, empty until paired
    std::vector<char> claimed;     ///< per target

    [[nodiscard]] std::size_t claimed_count() const;
};

/// N targets drawn i.i.d. from `target_pdf`, rejection-sampled out of true obstacles and the roi exterior.
/// Throws infeasible_initial_distribution after 10^6 rejected draws.
[[nodiscard]] TargetAssignment sample_targets(const Gmm& target_pdf, std::size_t n, const GroundTruthWorld& world,
                                              Rng& rng);

/// Greedy nearest available (robot, target) pair, ties by robot then target index.
void pair_greedy(TargetAssignment& assign, const std::vector<Vec2>& positions);

/// Constant-speed velocity toward -grad plus scaled repulsion, saturated to v_max.
[[nodiscard]] Vec2 baseline_velocity(const Vec2& attract_grad, const Vec2& repulse_grad, const BaselineConfig& cfg);

/// PDF-APF: the ADOC attractive potential with the target mixture as the command.
[[nodiscard]] SwarmState pdf_apf_step(const SwarmState& swarm, const Gmm& target_pdf, const ObstacleMap& map,
                                      const BaselineConfig& cfg, double dt);

/// Sum over unclaimed targets of -max(|x - t|, r_min)^-2 for one robot.
[[nodiscard]] double sapf_potential(const Vec2& x, const TargetAssignment& assign, double min_distance);
[[nodiscard]] Vec2 sapf_gradient(const Vec2& x, const TargetAssignment& assign, double min_distance);

/// Marks targets within claim_radius of any robot as claimed.
void update_claims(TargetAssignment& assign, const std::vector<Vec2>& positions, double claim_radius);

/// SAPF: claims, then one constant-speed step down the summed inverse-square potential.
[[nodiscard]] SwarmState sapf_step(const SwarmState& swarm, TargetAssignment& assign, const ObstacleMap& map,
                                   const BaselineConfig& cfg, double dt);

/// Roadmap over collocation means and targets, with obstacle-aware edge costs cached per map view.
class SppRoadmap {
public:
    SppRoadmap(const CollocationSet& colloc, const std::vector<Vec2>& targets, double d_th, double penalty);

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] const Vec2& node(std::size_t i) const { return nodes_.at(i); }
    [[nodiscard]] std::size_t target_node(std::size_t t) const { return n_colloc_ + t; }

    /// Edge cost for an arbitrary segment: length + penalty * occupied length.
    [[nodiscard]] double segment_cost(const ObstacleMap& map, const Vec2& a, const Vec2& b) const;

    /// Cheapest waypoint sequence from `start` to target node `t` (ends at the target position,
    /// excludes start). Empty when start is already at the target. Throws path_infeasible
    /// when no node is within d_th of start or the target is disconnected.
    [[nodiscard]] std::vector<Vec2> plan(const ObstacleMap& map, const Vec2& start, std::size_t t) const;

    /// Same search returning node indices, for tests; start is not a node.
    [[nodiscard]] std::vector<std::size_t> plan_nodes(const ObstacleMap& map, const Vec2& start, std::size_t t,
                                                      double* cost = nullptr) const;

private:
    void refresh(const ObstacleMap& map) const;

    struct Edge {
        std::size_t head;
        double cost;
    };
    std::vector<Vec2> nodes_;
    std::size_t n_colloc_;
    double d_th_;
    double penalty_;
    mutable std::vector<std::vector<Edge>> out_;
    mutable std::vector<std::uint8_t> cached_binary_;
};

struct SppState {
    TargetAssignment assign;
    std::vector<std::vector<Vec2>> paths;     ///< remaining waypoints per robot
    std::vector<double> planned_occupied;     ///< occupied length of each remaining path when planned
    std::vector<char> infeasible;             ///< robot holds position
    std::uint64_t planned_version = 0;
    bool initialized = false;
};

/// Paths for every robot (pairs greedily on first use).
void spp_plan(SppState& state, const std::vector<Vec2>& positions, const SppRoadmap& roadmap, const ObstacleMap& map);

/// Replans robots whose remaining path crosses newly occupied cells, then one constant-speed step.
[[nodiscard]] SwarmState spp_step(const SwarmState& swarm, SppState& state, const SppRoadmap& roadmap,
                                  const ObstacleMap& map, const BaselineConfig& cfg, double dt);

}  // namespace adoc
