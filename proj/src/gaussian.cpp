#include "adoc/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "adoc/error.hpp"

namespace adoc {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

Mat2 symmetrized(const Mat2& a) { return 0.5 * (a + a.transpose()); }

// tr(A B) for symmetric A, B, written so that swapping A and B is bitwise neutral.
double trace_of_product(const Mat2& a, const Mat2& b) {
    return a(0, 0) * b(0, 0) + a(1, 1) * b(1, 1) + 2.0 * (a(0, 1) * b(0, 1));
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_matrix: return "invalid-matrix";
        case ErrorCode::invalid_parameter: return "invalid-parameter";
        case ErrorCode::would_empty_mixture: return "would-empty-mixture";
        case ErrorCode::infeasible_marginals: return "infeasible-marginals";
        case ErrorCode::plan_infeasible: return "plan-infeasible";
        case ErrorCode::path_infeasible: return "path-infeasible";
        case ErrorCode::out_of_range: return "out-of-range";
        case ErrorCode::infeasible_initial_distribution: return "infeasible-initial-distribution";
        case ErrorCode::invalid_scenario: return "invalid-scenario";
    }
    return "unknown";
}

bool is_spd(const Mat2& a) {
    if (!a.allFinite()) return false;
    if (std::abs(a(0, 1) - a(1, 0)) > kSymmetryTolerance) return false;
    const double off = 0.5 * (a(0, 1) + a(1, 0));
    const double det = a(0, 0) * a(1, 1) - off * off;
    return a(0, 0) > 0.0 && det > 0.0;
}

Gaussian2::Gaussian2(const Vec2& mean, const Mat2& cov) : mean_(mean), cov_(symmetrized(cov)) {
    if (!mean_.allFinite()) throw Error(ErrorCode::invalid_parameter, "Gaussian2 mean is not finite");
    if (!is_spd(cov)) throw Error(ErrorCode::invalid_matrix, "Gaussian2 covariance is not SPD");
}

Gaussian2 Gaussian2::isotropic(const Vec2& mean, double variance) {
    return Gaussian2(mean, variance * Mat2::Identity());
}

double gaussian_pdf(const Vec2& x, const Vec2& mean, const Mat2& cov) {
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    const Vec2 d = x - mean;
    // cov^{-1} = adj(cov) / det
    const double q = (cov(1, 1) * d.x() * d.x() - 2.0 * cov(0, 1) * d.x() * d.y() + cov(0, 0) * d.y() * d.y()) / det;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double Gaussian2::pdf(const Vec2& x) const { return gaussian_pdf(x, mean_, cov_); }

Mat2 sqrtm_spd2(const Mat2& a) {
    if (!is_spd(a)) throw Error(ErrorCode::invalid_matrix, "sqrtm_spd2 requires an SPD matrix");
    const Mat2 s = symmetrized(a);
    const double root_det = std::sqrt(s.determinant());
    const double t = std::sqrt(s.trace() + 2.0 * root_det);
    return (s + root_det * Mat2::Identity()) / t;
}

double w2_gaussian_sq(const Gaussian2& p, const Gaussian2& q) {
    if (p == q) return 0.0;
    const double mean_term = (p.mean() - q.mean()).squaredNorm();
    // tr[(P^{1/2} Q P^{1/2})^{1/2}] = sqrt(tr(PQ) + 2 sqrt(det P det Q)) in 2D.
    const double fidelity =
        std::sqrt(trace_of_product(p.cov(), q.cov()) + 2.0 * std::sqrt(p.cov().determinant() * q.cov().determinant()));
    const double cov_term = (p.cov().trace() + q.cov().trace()) - 2.0 * fidelity;
    return mean_term + std::max(cov_term, 0.0);
}

double w2_gaussian(const Gaussian2& p, const Gaussian2& q) { return std::sqrt(w2_gaussian_sq(p, q)); }

Gaussian2 displacement_interpolate(const Gaussian2& p, const Gaussian2& q, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw Error(ErrorCode::invalid_parameter, "displacement_interpolate: eps must lie in [0, 1]");
    }
    if (eps == 0.0) return p;
    if (eps == 1.0) return q;

    const Vec2 mean = (1.0 - eps) * p.mean() + eps * q.mean();
    const Mat2 root_p = sqrtm_spd2(p.cov());
    const Mat2 inv_root_p = root_p.inverse();
    const Mat2 cross = sqrtm_spd2(symmetrized(root_p * q.cov() * root_p));
    const Mat2 blend = (1.0 - eps) * p.cov() + eps * cross;
    return Gaussian2(mean, symmetrized(inv_root_p * blend * blend * inv_root_p));
}

}  // namespace adoc
