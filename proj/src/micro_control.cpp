#include "adoc/micro_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adoc/error.hpp"

namespace adoc {

namespace {

// Isotropic density with variance s2 and its gradient in x.
double iso_pdf(const Vec2& d, double s2) {
    return std::exp(-0.5 * d.squaredNorm() / s2) / (2.0 * std::numbers::pi * s2);
}

// Direction used when two points coincide.
Vec2 fallback_direction(std::size_t n) {
    const double a = 2.399963229728653 * static_cast<double>(n);
    return {std::cos(a), std::sin(a)};
}

double rep_value(double rho, double rho0) {
    if (rho >= rho0) return 0.0;
    const double t = 1.0 / rho - 1.0 / rho0;
    return 0.5 * t * t;
}

// d/d rho of rep_value, times -1 (magnitude of the push away).
double rep_push(double rho, double rho0) {
    if (rho >= rho0) return 0.0;
    return (1.0 / rho - 1.0 / rho0) / (rho * rho);
}

void check_bandwidth(double bandwidth) {
    if (!(bandwidth > 0.0)) throw Error(ErrorCode::invalid_parameter, "bandwidth must be positive");
}

}  // namespace

Gmm kde_estimate(const std::vector<Vec2>& positions, double bandwidth) {
    check_bandwidth(bandwidth);
    if (positions.empty()) throw Error(ErrorCode::invalid_parameter, "empty swarm");
    std::vector<Gaussian2> comps;
    comps.reserve(positions.size());
    for (const auto& p : positions) comps.push_back(Gaussian2::isotropic(p, bandwidth * bandwidth));
    std::vector<double> w(positions.size(), 1.0 / static_cast<double>(positions.size()));
    return Gmm(std::move(comps), std::move(w));
}

double attractive_potential(const std::vector<Vec2>& positions, const Gmm& commanded, double gamma,
                            double bandwidth) {
    check_bandwidth(bandwidth);
    const double n = static_cast<double>(positions.size());
    const Mat2 h2 = bandwidth * bandwidth * Mat2::Identity();
    double pp = 0.0;
    for (std::size_t a = 0; a < commanded.size(); ++a) {
        for (std::size_t b = 0; b < commanded.size(); ++b) {
            const auto& ga = commanded.component(a);
            const auto& gb = commanded.component(b);
            pp += commanded.weight(a) * commanded.weight(b) * gaussian_pdf(ga.mean(), gb.mean(), ga.cov() + gb.cov());
        }
    }
    double pq = 0.0;
    for (const auto& x : positions) {
        for (std::size_t c = 0; c < commanded.size(); ++c) {
            const auto& g = commanded.component(c);
            pq += commanded.weight(c) * gaussian_pdf(x, g.mean(), g.cov() + h2);
        }
    }
    pq /= n;
    double qq = 0.0;
    const double s2 = 2.0 * bandwidth * bandwidth;
    for (const auto& x : positions) {
        for (const auto& y : positions) qq += iso_pdf(x - y, s2);
    }
    qq /= n * n;
    return pp - 2.0 * gamma * pq + gamma * gamma * qq;
}

std::vector<Vec2> attractive_gradient(const std::vector<Vec2>& positions, const Gmm& commanded, double gamma,
                                      double bandwidth) {
    check_bandwidth(bandwidth);
    const std::size_t n = positions.size();
    const double nd = static_cast<double>(n);
    const Mat2 h2 = bandwidth * bandwidth * Mat2::Identity();
    std::vector<Mat2> s_inv;
    std::vector<Mat2> s;
    for (const auto& g : commanded.components()) {
        s.push_back(g.cov() + h2);
        s_inv.push_back(s.back().inverse());
    }
    const double s2 = 2.0 * bandwidth * bandwidth;
    // Beyond this separation the robot-robot kernel is below e^-32 of its peak.
    const double cutoff2 = 64.0 * s2;
    std::vector<Vec2> grad(n, Vec2::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& x = positions[i];
        Vec2 g = Vec2::Zero();
        for (std::size_t c = 0; c < commanded.size(); ++c) {
            const Vec2 d = x - commanded.component(c).mean();
            const double v = gaussian_pdf(x, commanded.component(c).mean(), s[c]);
            g += commanded.weight(c) * v * (s_inv[c] * d);
        }
        grad[i] += 2.0 * gamma * g;
    }
    const double pair_scale = 2.0 * gamma * gamma / nd;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 d = positions[i] - positions[j];
            const double r2 = d.squaredNorm();
            if (r2 > cutoff2) continue;
            const Vec2 f = pair_scale * iso_pdf(d, s2) * d / s2;
            grad[i] -= f;
            grad[j] += f;
        }
    }
    return grad;
}

double attractive_potential_quadrature(const std::vector<Vec2>& positions, const Gmm& commanded, double gamma,
                                       double bandwidth, const Roi& box, double spacing) {
    check_bandwidth(bandwidth);
    if (!(spacing > 0.0)) throw Error(ErrorCode::invalid_parameter, "quadrature spacing must be positive");
    const Gmm q = kde_estimate(positions, bandwidth);
    const int nx = static_cast<int>(std::round(box.lx / spacing));
    const int ny = static_cast<int>(std::round(box.ly / spacing));
    const double hx = box.lx / nx;
    const double hy = box.ly / ny;
    double acc = 0.0;
    for (int iy = 0; iy <= ny; ++iy) {
        const double wy = (iy == 0 || iy == ny) ? 0.5 : 1.0;
        for (int ix = 0; ix <= nx; ++ix) {
            const double wx = (ix == 0 || ix == nx) ? 0.5 : 1.0;
            const Vec2 x(ix * hx, iy * hy);
            const double diff = commanded.pdf(x) - gamma * q.pdf(x);
            acc += wx * wy * diff * diff;
        }
    }
    return acc * hx * hy;
}

double repulsive_potential(const std::vector<Vec2>& positions, std::size_t n, const ObstacleMap& map, double rho_obs,
                           double rho_rob) {
    const Vec2& x = positions.at(n);
    double u = 0.0;
    Vec2 obs;
    if (map.nearest_occupied(x, rho_obs, obs)) u += rep_value((x - obs).norm(), rho_obs);
    for (std::size_t m = 0; m < positions.size(); ++m) {
        if (m == n) continue;
        u += rep_value((x - positions[m]).norm(), rho_rob);
    }
    return u;
}

std::vector<Vec2> repulsive_gradient(const std::vector<Vec2>& positions, const ObstacleMap& map, double rho_obs,
                                     double rho_rob, double max_repulsion) {
    const std::size_t n = positions.size();
    std::vector<Vec2> grad(n, Vec2::Zero());
    auto push = [max_repulsion](const Vec2& away, double rho, double rho0, std::size_t idx) -> Vec2 {
        // Gradient of the potential points toward the source, i.e. opposite to `away`.
        if (rho <= 0.0) return -max_repulsion * fallback_direction(idx);
        const double mag = std::min(rep_push(rho, rho0), max_repulsion);
        return -mag * away / rho;
    };
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 obs;
        if (map.nearest_occupied(positions[i], rho_obs, obs)) {
            const Vec2 away = positions[i] - obs;
            grad[i] += push(away, away.norm(), rho_obs, i);
        }
    }
    const double r2max = rho_rob * rho_rob;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 away = positions[i] - positions[j];
            const double r2 = away.squaredNorm();
            if (r2 >= r2max) continue;
            const Vec2 g = push(away, std::sqrt(r2), rho_rob, i);
            grad[i] += g;
            grad[j] -= g;
        }
    }
    return grad;
}

Vec2 saturate(const Vec2& v, double v_max) {
    const double norm = v.norm();
    if (!(norm > v_max)) return v;
    return v * (v_max / norm);
}

SwarmState apply_controls(const SwarmState& swarm, const std::vector<Vec2>& controls, double dt, const Roi& roi) {
    if (controls.size() != swarm.positions.size()) throw Error(ErrorCode::invalid_parameter, "control count mismatch");
    SwarmState next = swarm;
    next.controls = controls;
    for (std::size_t i = 0; i < controls.size(); ++i) next.positions[i] = roi.clamp(swarm.positions[i] + dt * controls[i]);
    ++next.step;
    return next;
}

SwarmState step_robots(const SwarmState& swarm, const std::vector<Vec2>& attract, const std::vector<Vec2>& repulse,
                       double dt, double v_max, const Roi& roi) {
    const std::size_t n = swarm.positions.size();
    if (attract.size() != n || repulse.size() != n) throw Error(ErrorCode::invalid_parameter, "field size mismatch");
    std::vector<Vec2> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = saturate(-(attract[i] + repulse[i]), v_max);
    return apply_controls(swarm, u, dt, roi);
}

std::vector<Vec2> adoc_controls(const std::vector<Vec2>& positions, const Gmm& commanded, const ObstacleMap& map,
                                const MicroConfig& cfg) {
    const auto ga = attractive_gradient(positions, commanded, cfg.gamma, cfg.bandwidth);
    const auto gr = repulsive_gradient(positions, map, cfg.rho_obs, cfg.rho_rob, cfg.max_repulsion);
    std::vector<Vec2> u(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        u[i] = saturate(-(cfg.attract_gain * ga[i] + cfg.repulse_gain * gr[i]), cfg.v_max);
    }
    return u;
}

}  // namespace adoc
