#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adoc/gmm.hpp"
#include "adoc/planner.hpp"
#include "adoc/world_map.hpp"

namespace adoc {

enum class PlannerKind { adoc, pdf_apf, sapf, spp };

[[nodiscard]] const char* to_string(PlannerKind kind) noexcept;
/// "adoc", "pdf-apf", "sapf" or "spp"; anything else throws invalid_scenario.
[[nodiscard]] PlannerKind parse_planner(const std::string& name);

struct ScenarioConfig {
    std::string name = "unnamed";
    Roi roi{20.0, 16.0};
    double grid_spacing = 0.1;
    std::vector<Polygon> obstacles;
    std::vector<Polygon> prior_obstacles;
    Gmm initial{Gaussian2::isotropic(Vec2(2.0, 2.0), 0.5)};
    Gmm target{Gaussian2::isotropic(Vec2(18.0, 14.0), 0.5)};
    std::size_t robots = 100;
    double fov_radius = 1.0;
    double dt = 0.01;
    double dbar = 0.05;
    double d_th = 4.0;
    double colloc_spacing = 1.0;
    double colloc_variance = 0.5;
    double gamma = 0.85;
    double bandwidth = 0.3;
    double rho_obs = 0.3;
    double rho_rob = 0.1;
    double omega_th = kDefaultOmegaTh;
    double lambda_obs = 1.0;
    double v_max = 5.0;
    double v_rob = 5.0;
    double attract_gain = 60.0;
    double repulse_gain = 0.02;
    double claim_radius = 0.05;
    double spp_penalty = 1000.0;
    double completion_fraction = 0.95;
    double completion_mahalanobis = 3.0;
    long max_steps = 2000;
    long persist_every = 10;
    std::uint64_t seed = 1;
    PlannerKind planner = PlannerKind::adoc;
    ReplanMode replan_mode = ReplanMode::triggered;

    /// Throws invalid_scenario on any violated field constraint.
    void validate() const;
};

/// Parse a JSON scenario document. Missing keys keep their defaults.
[[nodiscard]] ScenarioConfig parse_scenario(const std::string& json_text);
[[nodiscard]] ScenarioConfig load_scenario(const std::string& path);

/// Full JSON echo of the config (every field, including defaults).
[[nodiscard]] std::string scenario_to_json(const ScenarioConfig& cfg, int indent = 2);

}  // namespace adoc
