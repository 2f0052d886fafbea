#pragma once

#include <Eigen/Dense>
#include <utility>

#include "adoc/gmm.hpp"

namespace adoc {

inline constexpr double kMarginalTolerance = 1e-9;

/// Joint probability matrix between two marginals plus its objective value (km^2).
struct TransportPlan {
    Eigen::MatrixXd matrix;
    double cost = 0.0;
};

/// Exact discrete optimal transport via the transportation simplex
/// (northwest-corner start, MODI potentials, Dantzig pricing with lowest
/// (row, column) tie-break, 1e-12 supply perturbation against cycling).
///
/// `source` and `sink` must be non-negative and each sum to 1 within 1e-9,
/// otherwise ErrorCode::infeasible_marginals. Costs must be finite and >= 0.
/// The returned plan reproduces the unperturbed marginals.
[[nodiscard]] TransportPlan solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& source,
                                            const Eigen::VectorXd& sink);

/// Pairwise W2^2 between the components of p (rows) and q (columns).
[[nodiscard]] Eigen::MatrixXd component_cost_matrix(const Gmm& p, const Gmm& q);

/// Wasserstein-GMM distance d(p, q) and the optimal component coupling.
/// d(p, q) and d(q, p) are computed from the same canonical problem, so they agree bitwise.
[[nodiscard]] std::pair<double, TransportPlan> wg_metric(const Gmm& p, const Gmm& q);

/// Geodesic between p and q in the WG space: sum over coupled pairs of
/// pi*(i, j) * displacement_interpolate(p_i, q_j, eps). Zero-weight pairs are
/// dropped and identical components merged.
[[nodiscard]] Gmm gmm_geodesic(const Gmm& p, const Gmm& q, double eps);

/// Same, reusing a coupling the caller already holds (must be optimal for p, q).
[[nodiscard]] Gmm gmm_geodesic(const Gmm& p, const Gmm& q, const TransportPlan& plan, double eps);

}  // namespace adoc
