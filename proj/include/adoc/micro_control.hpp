#pragma once

#include <vector>

#include "adoc/gmm.hpp"
#include "adoc/world_map.hpp"

namespace adoc {

struct SwarmState {
    std::vector<Vec2> positions;   ///< km
    std::vector<Vec2> controls;    ///< km/h, last applied
    long step = 0;
};

struct MicroConfig {
    double gamma = 0.85;           ///< attraction balance between commanded and robot densities
    double bandwidth = 0.3;        ///< KDE kernel standard deviation (km)
    double rho_obs = 0.3;          ///< obstacle repulsion range (km)
    double rho_rob = 0.1;          ///< robot repulsion range (km)
    double v_max = 5.0;            ///< km/h
    double attract_gain = 60.0;    ///< km^2/h per unit of N * dU/dx
    double repulse_gain = 0.02;    ///< km^4/h per unit of repulsive gradient
    double max_repulsion = 1e6;    ///< cap on a single repulsive gradient magnitude
};

/// Kernel density estimate of the swarm: equal-weight N(x_n, h^2 I).
[[nodiscard]] Gmm kde_estimate(const std::vector<Vec2>& positions, double bandwidth);

/// U = int p^2 - 2 gamma int p q + gamma^2 int q^2, with q the KDE of `positions`.
/// Every integral is a closed-form Gaussian product.
[[nodiscard]] double attractive_potential(const std::vector<Vec2>& positions, const Gmm& commanded, double gamma,
                                          double bandwidth);

/// N * dU/dx_n for every robot (scaling by N keeps the field independent of swarm size).
[[nodiscard]] std::vector<Vec2> attractive_gradient(const std::vector<Vec2>& positions, const Gmm& commanded,
                                                    double gamma, double bandwidth);

/// The same potential by trapezoid quadrature on a grid of `spacing` over the roi.
[[nodiscard]] double attractive_potential_quadrature(const std::vector<Vec2>& positions, const Gmm& commanded,
                                                     double gamma, double bandwidth, const Roi& box, double spacing);

/// Sum of 0.5 (1/rho - 1/rho0)^2 over the nearest occupied cell (rho0 = rho_obs)
/// and every other robot closer than rho_rob.
[[nodiscard]] double repulsive_potential(const std::vector<Vec2>& positions, std::size_t n, const ObstacleMap& map,
                                         double rho_obs, double rho_rob);

/// Gradient of repulsive_potential with respect to x_n, for every n.
/// Coincident points push along a fixed index-dependent direction with magnitude max_repulsion.
[[nodiscard]] std::vector<Vec2> repulsive_gradient(const std::vector<Vec2>& positions, const ObstacleMap& map,
                                                   double rho_obs, double rho_rob, double max_repulsion = 1e6);

/// Clip v to norm <= v_max.
[[nodiscard]] Vec2 saturate(const Vec2& v, double v_max);

/// x_n += dt * u_n with u_n = saturate(-(attract_n + repulse_n), v_max); positions stay inside the roi.
[[nodiscard]] SwarmState step_robots(const SwarmState& swarm, const std::vector<Vec2>& attract,
                                     const std::vector<Vec2>& repulse, double dt, double v_max, const Roi& roi);

/// Applies explicit velocities (already saturated by the caller) and advances the step counter.
[[nodiscard]] SwarmState apply_controls(const SwarmState& swarm, const std::vector<Vec2>& controls, double dt,
                                        const Roi& roi);

/// ADOC velocity law: saturate(-(attract_gain * grad_attr + repulse_gain * grad_rep), v_max).
[[nodiscard]] std::vector<Vec2> adoc_controls(const std::vector<Vec2>& positions, const Gmm& commanded,
                                              const ObstacleMap& map, const MicroConfig& cfg);

}  // namespace adoc
