#pragma once

#include <Eigen/Dense>

namespace adoc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// 2D Gaussian component N(mean, cov). Units are km and km^2.
///
/// The covariance is symmetrized on construction and must then be SPD;
/// otherwise ErrorCode::invalid_matrix is thrown. Instances are immutable.
class Gaussian2 {
public:
    Gaussian2(const Vec2& mean, const Mat2& cov);

    /// Isotropic helper: N(mean, variance * I).
    static Gaussian2 isotropic(const Vec2& mean, double variance);

    [[nodiscard]] const Vec2& mean() const noexcept { return mean_; }
    [[nodiscard]] const Mat2& cov() const noexcept { return cov_; }

    [[nodiscard]] double pdf(const Vec2& x) const;

    friend bool operator==(const Gaussian2& a, const Gaussian2& b) {
        return a.mean_ == b.mean_ && a.cov_ == b.cov_;
    }

private:
    Vec2 mean_;
    Mat2 cov_;
};

/// True when `a` is symmetric within 1e-12 and both eigenvalues are positive.
[[nodiscard]] bool is_spd(const Mat2& a);

/// Principal square root of a 2x2 SPD matrix, closed form
/// X = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A)).
[[nodiscard]] Mat2 sqrtm_spd2(const Mat2& a);

/// Closed-form 2-Wasserstein distance between two Gaussians (km).
[[nodiscard]] double w2_gaussian(const Gaussian2& p, const Gaussian2& q);

/// Squared 2-Wasserstein distance; avoids the sqrt when only W2^2 is needed.
[[nodiscard]] double w2_gaussian_sq(const Gaussian2& p, const Gaussian2& q);

/// Point on the constant-speed W2 geodesic from p (eps = 0) to q (eps = 1).
/// Endpoints are returned exactly. eps outside [0, 1] throws invalid_parameter.
[[nodiscard]] Gaussian2 displacement_interpolate(const Gaussian2& p, const Gaussian2& q, double eps);

/// Density of N(mean, cov) at x, for covariances that are not wrapped in a Gaussian2.
[[nodiscard]] double gaussian_pdf(const Vec2& x, const Vec2& mean, const Mat2& cov);

}  // namespace adoc
