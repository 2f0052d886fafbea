#include "adoc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "adoc/error.hpp"

namespace adoc {

namespace {

constexpr double kPerturbation = 1e-12;

struct Cell {
    int row;
    int col;
};

// Spanning tree over m row nodes [0, m) and n column nodes [m, m + n).
class BasisTree {
public:
    BasisTree(int m, int n) : m_(m), n_(n) {}

    void build(const std::vector<Cell>& basis) {
        adj_.assign(static_cast<std::size_t>(m_ + n_), {});
        for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
            const auto& c = basis[static_cast<std::size_t>(k)];
            adj_[static_cast<std::size_t>(c.row)].push_back({m_ + c.col, k});
            adj_[static_cast<std::size_t>(m_ + c.col)].push_back({c.row, k});
        }
    }

    // Potentials u (rows) and v (columns) with u_0 = 0 and c_ij = u_i + v_j on basic cells.
    void potentials(const Eigen::MatrixXd& cost, const std::vector<Cell>& basis, std::vector<double>& u,
                    std::vector<double>& v) const {
        std::vector<double> pot(static_cast<std::size_t>(m_ + n_), 0.0);
        std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (const auto& [next, k] : adj_[static_cast<std::size_t>(node)]) {
                if (seen[static_cast<std::size_t>(next)]) continue;
                const auto& c = basis[static_cast<std::size_t>(k)];
                // u_i + v_j = c_ij
                pot[static_cast<std::size_t>(next)] = cost(c.row, c.col) - pot[static_cast<std::size_t>(node)];
                seen[static_cast<std::size_t>(next)] = 1;
                stack.push_back(next);
            }
        }
        u.assign(pot.begin(), pot.begin() + m_);
        v.assign(pot.begin() + m_, pot.end());
    }

    // Basis indices along the tree path from row node `row` to column node `m + col`.
    std::vector<int> path(int row, int col) const {
        const int target = m_ + col;
        std::vector<int> parent_edge(static_cast<std::size_t>(m_ + n_), -1);
        std::vector<int> parent(static_cast<std::size_t>(m_ + n_), -1);
        std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
        std::vector<int> queue{row};
        seen[static_cast<std::size_t>(row)] = 1;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const int node = queue[head];
            if (node == target) break;
            for (const auto& [next, k] : adj_[static_cast<std::size_t>(node)]) {
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = 1;
                parent[static_cast<std::size_t>(next)] = node;
                parent_edge[static_cast<std::size_t>(next)] = k;
                queue.push_back(next);
            }
        }
        std::vector<int> edges;
        for (int node = target; node != row; node = parent[static_cast<std::size_t>(node)]) {
            edges.push_back(parent_edge[static_cast<std::size_t>(node)]);
        }
        std::reverse(edges.begin(), edges.end());
        return edges;
    }

private:
    int m_;
    int n_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
};

// Flows on a spanning-tree basis that reproduce the given marginals exactly (leaf elimination).
std::vector<double> tree_flows(int m, int n, const std::vector<Cell>& basis, const Eigen::VectorXd& source,
                               const Eigen::VectorXd& sink) {
    std::vector<double> residual(static_cast<std::size_t>(m + n));
    for (int i = 0; i < m; ++i) residual[static_cast<std::size_t>(i)] = source(i);
    for (int j = 0; j < n; ++j) residual[static_cast<std::size_t>(m + j)] = sink(j);
    std::vector<int> degree(static_cast<std::size_t>(m + n), 0);
    std::vector<std::vector<int>> incident(static_cast<std::size_t>(m + n));
    for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
        const auto& c = basis[static_cast<std::size_t>(k)];
        ++degree[static_cast<std::size_t>(c.row)];
        ++degree[static_cast<std::size_t>(m + c.col)];
        incident[static_cast<std::size_t>(c.row)].push_back(k);
        incident[static_cast<std::size_t>(m + c.col)].push_back(k);
    }
    std::vector<double> flow(basis.size(), 0.0);
    std::vector<char> done(basis.size(), 0);
    std::vector<int> leaves;
    for (int node = 0; node < m + n; ++node) {
        if (degree[static_cast<std::size_t>(node)] == 1) leaves.push_back(node);
    }
    while (!leaves.empty()) {
        const int node = leaves.back();
        leaves.pop_back();
        if (degree[static_cast<std::size_t>(node)] != 1) continue;
        int edge = -1;
        for (int k : incident[static_cast<std::size_t>(node)]) {
            if (!done[static_cast<std::size_t>(k)]) {
                edge = k;
                break;
            }
        }
        const auto& c = basis[static_cast<std::size_t>(edge)];
        const int other = node < m ? m + c.col : c.row;
        const double f = residual[static_cast<std::size_t>(node)];
        flow[static_cast<std::size_t>(edge)] = f;
        done[static_cast<std::size_t>(edge)] = 1;
        residual[static_cast<std::size_t>(node)] = 0.0;
        residual[static_cast<std::size_t>(other)] -= f;
        --degree[static_cast<std::size_t>(node)];
        if (--degree[static_cast<std::size_t>(other)] == 1) leaves.push_back(other);
    }
    return flow;
}

void check_marginal(const Eigen::VectorXd& w, const char* name) {
    if (w.size() == 0) throw Error(ErrorCode::infeasible_marginals, std::string(name) + " marginal is empty");
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w(i) >= 0.0) || !std::isfinite(w(i))) {
            throw Error(ErrorCode::infeasible_marginals, std::string(name) + " marginal has a negative entry");
        }
    }
    if (std::abs(w.sum() - 1.0) > kMarginalTolerance) {
        throw Error(ErrorCode::infeasible_marginals, std::string(name) + " marginal does not sum to 1");
    }
}

}  // namespace

TransportPlan solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& source,
                              const Eigen::VectorXd& sink) {
    check_marginal(source, "source");
    check_marginal(sink, "sink");
    const int m = static_cast<int>(source.size());
    const int n = static_cast<int>(sink.size());
    if (cost.rows() != m || cost.cols() != n) {
        throw Error(ErrorCode::invalid_parameter, "cost matrix shape does not match the marginals");
    }
    if (!cost.allFinite() || (m * n > 0 && cost.minCoeff() < 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "transport costs must be finite and non-negative");
    }

    // Perturbed marginals: each supply gains delta, the last demand gains m * delta.
    Eigen::VectorXd a = source.array() + kPerturbation;
    Eigen::VectorXd b = sink;
    b(n - 1) += m * kPerturbation;
    // Absorb the residual sum mismatch (<= 1e-9) into the last demand.
    b(n - 1) += a.sum() - b.sum();

    // Northwest-corner start, exactly m + n - 1 basic cells.
    std::vector<Cell> basis;
    std::vector<double> flow;
    {
        Eigen::VectorXd ra = a;
        Eigen::VectorXd rb = b;
        int i = 0;
        int j = 0;
        while (i < m && j < n) {
            const double x = std::min(ra(i), rb(j));
            basis.push_back({i, j});
            flow.push_back(x);
            ra(i) -= x;
            rb(j) -= x;
            if (i == m - 1) {
                ++j;
            } else if (j == n - 1) {
                ++i;
            } else if (ra(i) <= rb(j)) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    const double tol = 1e-12 * (1.0 + (m * n > 0 ? cost.maxCoeff() : 0.0));
    BasisTree tree(m, n);
    std::vector<double> u;
    std::vector<double> v;
    const long max_iterations = 100L * (m + n) * (m + n) + 1000;
    for (long iter = 0;; ++iter) {
        if (iter > max_iterations) {
            throw Error(ErrorCode::infeasible_marginals, "transportation simplex failed to converge");
        }
        tree.build(basis);
        tree.potentials(cost, basis, u, v);

        // Dantzig pricing; strict comparison keeps the lowest (row, col) on ties.
        double best = -tol;
        int er = -1;
        int ec = -1;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const double reduced = cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
                if (reduced < best) {
                    best = reduced;
                    er = i;
                    ec = j;
                }
            }
        }
        if (er < 0) break;

        // Cycle: entering cell (+), then the tree path alternates -, +, -, ...
        const std::vector<int> path = tree.path(er, ec);
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t s = 0; s < path.size(); s += 2) {
            const int k = path[s];
            if (flow[static_cast<std::size_t>(k)] < theta) {
                theta = flow[static_cast<std::size_t>(k)];
                leaving = k;
            }
        }
        for (std::size_t s = 0; s < path.size(); ++s) {
            const int k = path[s];
            flow[static_cast<std::size_t>(k)] += (s % 2 == 0) ? -theta : theta;
        }
        basis[static_cast<std::size_t>(leaving)] = {er, ec};
        flow[static_cast<std::size_t>(leaving)] = theta;
    }

    // Re-solve the optimal basis against the unperturbed marginals.
    Eigen::VectorXd exact_sink = sink;
    exact_sink(n - 1) += source.sum() - sink.sum();
    const std::vector<double> exact = tree_flows(m, n, basis, source, exact_sink);

    TransportPlan plan;
    plan.matrix = Eigen::MatrixXd::Zero(m, n);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        plan.matrix(basis[k].row, basis[k].col) += std::max(exact[k], 0.0);
    }
    plan.cost = (plan.matrix.array() * cost.array()).sum();
    return plan;
}

Eigen::MatrixXd component_cost_matrix(const Gmm& p, const Gmm& q) {
    Eigen::MatrixXd c(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                w2_gaussian_sq(p.component(i), q.component(j));
        }
    }
    return c;
}

namespace {

Eigen::VectorXd weight_vector(const Gmm& g) {
    return Eigen::Map<const Eigen::VectorXd>(g.weights().data(), static_cast<Eigen::Index>(g.size()));
}

// Total order on mixtures used to orient the WG problem canonically.
bool canonical_less(const Gmm& p, const Gmm& q) {
    if (p.size() != q.size()) return p.size() < q.size();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& a = p.component(i);
        const auto& b = q.component(i);
        const double ka[] = {p.weight(i), a.mean().x(), a.mean().y(), a.cov()(0, 0), a.cov()(0, 1), a.cov()(1, 1)};
        const double kb[] = {q.weight(i), b.mean().x(), b.mean().y(), b.cov()(0, 0), b.cov()(0, 1), b.cov()(1, 1)};
        for (int k = 0; k < 6; ++k) {
            if (ka[k] != kb[k]) return ka[k] < kb[k];
        }
    }
    return false;
}

}  // namespace

std::pair<double, TransportPlan> wg_metric(const Gmm& p, const Gmm& q) {
    if (p == q) {
        TransportPlan plan;
        plan.matrix = weight_vector(p).asDiagonal();
        plan.cost = 0.0;
        return {0.0, plan};
    }
    const bool swapped = canonical_less(q, p);
    const Gmm& a = swapped ? q : p;
    const Gmm& b = swapped ? p : q;
    TransportPlan plan = solve_transport(component_cost_matrix(a, b), weight_vector(a), weight_vector(b));
    if (swapped) plan.matrix.transposeInPlace();
    return {std::sqrt(std::max(plan.cost, 0.0)), plan};
}

Gmm gmm_geodesic(const Gmm& p, const Gmm& q, const TransportPlan& plan, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw Error(ErrorCode::invalid_parameter, "gmm_geodesic: eps must lie in [0, 1]");
    std::vector<Gaussian2> comps;
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double w = plan.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (w <= 1e-15) continue;
            comps.push_back(displacement_interpolate(p.component(i), q.component(j), eps));
            weights.push_back(w);
            total += w;
        }
    }
    for (double& w : weights) w = std::min(w / total, 1.0);
    return merge_identical(Gmm(std::move(comps), std::move(weights)));
}

Gmm gmm_geodesic(const Gmm& p, const Gmm& q, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw Error(ErrorCode::invalid_parameter, "gmm_geodesic: eps must lie in [0, 1]");
    return gmm_geodesic(p, q, wg_metric(p, q).second, eps);
}

}  // namespace adoc
