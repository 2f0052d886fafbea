#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "adoc/error.hpp"
#include "adoc/transport.hpp"
#include "bfs_enumeration.hpp"
#include "network_simplex.hpp"
#include "test_util.hpp"

using namespace adoc;

namespace {

Eigen::VectorXd random_simplex(std::mt19937_64& g, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = testutil::uniform(g, 0.05, 1.0);
    return v / v.sum();
}

void expect_marginals(const Eigen::MatrixXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    EXPECT_LE((p.rowwise().sum() - a).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((p.colwise().sum().transpose() - b).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GE(p.minCoeff(), 0.0);
}

// Random feasible plan: rounds of randomly ordered NW-corner style fills.
Eigen::MatrixXd random_feasible_plan(std::mt19937_64& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const int m = static_cast<int>(a.size());
    const int n = static_cast<int>(b.size());
    std::vector<int> rows(m), cols(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), g);
    std::shuffle(cols.begin(), cols.end(), g);
    Eigen::VectorXd ra = a, rb = b;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, n);
    int i = 0, j = 0;
    while (i < m && j < n) {
        const double f = std::min(ra[rows[i]], rb[cols[j]]);
        p(rows[i], cols[j]) += f;
        ra[rows[i]] -= f;
        rb[cols[j]] -= f;
        if (ra[rows[i]] <= rb[cols[j]]) ++i;
        else ++j;
    }
    return p;
}

}  // namespace

TEST(SolveTransport, TwoByTwoDiagonal) {
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 1, 0;
    Eigen::VectorXd a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.5;
    const TransportPlan t = solve_transport(c, a, b);
    EXPECT_NEAR(t.cost, 0.0, 1e-15);
    EXPECT_NEAR(t.matrix(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(t.matrix(1, 1), 0.5, 1e-12);
    EXPECT_NEAR(t.matrix(0, 1), 0.0, 1e-12);
}

TEST(SolveTransport, DegenerateSingleSource) {
    Eigen::MatrixXd c(1, 3);
    c << 1, 2, 3;
    Eigen::VectorXd a(1), b(3);
    a << 1.0;
    b << 0.2, 0.3, 0.5;
    const TransportPlan t = solve_transport(c, a, b);
    EXPECT_NEAR(t.cost, 0.2 + 0.6 + 1.5, 1e-12);
    expect_marginals(t.matrix, a, b);
}

TEST(SolveTransport, RejectsBadMarginals) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd a(2), b(2);
    a << 0.5, 0.6;
    b << 0.5, 0.5;
    try {
        (void)solve_transport(c, a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::infeasible_marginals);
    }
}

TEST(SolveTransport, MatchesBasisEnumeration) {
    std::mt19937_64 g(31);
    for (int t = 0; t < 60; ++t) {
        const int m = 1 + static_cast<int>(g() % 4);
        const int n = 1 + static_cast<int>(g() % 4);
        Eigen::MatrixXd c(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = testutil::uniform(g, 0.0, 10.0);
        const Eigen::VectorXd a = random_simplex(g, m);
        const Eigen::VectorXd b = random_simplex(g, n);
        const TransportPlan sol = solve_transport(c, a, b);
        const oracle::EnumerationResult o = oracle::enumerate_bases(c, a, b);
        EXPECT_NEAR(sol.cost, o.best_cost, 1e-9 * (1.0 + o.best_cost));
        expect_marginals(sol.matrix, a, b);
    }
}

TEST(SolveTransport, MatchesNetworkSimplex) {
    std::mt19937_64 g(32);
    for (int t = 0; t < 60; ++t) {
        const int m = 2 + static_cast<int>(g() % 8);
        const int n = 2 + static_cast<int>(g() % 8);
        Eigen::MatrixXd c(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = testutil::uniform(g, 0.0, 5.0);
        const Eigen::VectorXd a = random_simplex(g, m);
        const Eigen::VectorXd b = random_simplex(g, n);
        oracle::NetworkSimplex ns(std::vector<double>(a.data(), a.data() + m),
                                  std::vector<double>(b.data(), b.data() + n),
                                  [&](std::size_t i, std::size_t j) { return c(i, j); });
        EXPECT_NEAR(solve_transport(c, a, b).cost, ns.solve(), 1e-10);
    }
}

TEST(SolveTransport, NoWorseThanRandomFeasiblePlans) {
    std::mt19937_64 g(33);
    for (int t = 0; t < 20; ++t) {
        const int m = 2 + static_cast<int>(g() % 5);
        const int n = 2 + static_cast<int>(g() % 5);
        Eigen::MatrixXd c(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = testutil::uniform(g, 0.0, 10.0);
        const Eigen::VectorXd a = random_simplex(g, m);
        const Eigen::VectorXd b = random_simplex(g, n);
        const double best = solve_transport(c, a, b).cost;
        for (int k = 0; k < 50; ++k) {
            const Eigen::MatrixXd p = random_feasible_plan(g, a, b);
            expect_marginals(p, a, b);
            EXPECT_LE(best, (p.array() * c.array()).sum() + 1e-12);
        }
    }
}

TEST(WgMetric, SingleComponentsReduceToW2) {
    const Gaussian2 p(Vec2(0, 0), Mat2::Identity());
    const Gaussian2 q(Vec2(3, 4), 2.0 * Mat2::Identity());
    EXPECT_NEAR(wg_metric(Gmm(p), Gmm(q)).first, w2_gaussian(p, q), 1e-12);
}

TEST(WgMetric, TwoByTwoLineSearch) {
    // With two components on each side the coupling has one free parameter t = pi(0, 0).
    std::mt19937_64 g(34);
    for (int trial = 0; trial < 20; ++trial) {
        const Gmm p = [&] {
            const double w = testutil::uniform(g, 0.1, 0.9);
            return Gmm({testutil::random_gaussian(g), testutil::random_gaussian(g)}, {w, 1.0 - w});
        }();
        const Gmm q = [&] {
            const double w = testutil::uniform(g, 0.1, 0.9);
            return Gmm({testutil::random_gaussian(g), testutil::random_gaussian(g)}, {w, 1.0 - w});
        }();
        const Eigen::MatrixXd c = component_cost_matrix(p, q);
        const double a0 = p.weight(0), b0 = q.weight(0);
        const double lo = std::max(0.0, a0 + b0 - 1.0), hi = std::min(a0, b0);
        double best = std::numeric_limits<double>::infinity();
        const int steps = 20000;
        for (int k = 0; k <= steps; ++k) {
            const double t = lo + (hi - lo) * k / steps;
            const double cost = t * c(0, 0) + (a0 - t) * c(0, 1) + (b0 - t) * c(1, 0) + (1.0 - a0 - b0 + t) * c(1, 1);
            best = std::min(best, cost);
        }
        const double d = wg_metric(p, q).first;
        EXPECT_NEAR(d * d, best, 1e-9 * (1.0 + best));
    }
}

TEST(WgMetric, AxiomsOnRandomTriples) {
    std::mt19937_64 g(35);
    for (int t = 0; t < 100; ++t) {
        const Gmm a = testutil::random_gmm(g);
        const Gmm b = testutil::random_gmm(g);
        const Gmm c = testutil::random_gmm(g);
        EXPECT_EQ(wg_metric(a, a).first, 0.0);
        EXPECT_EQ(wg_metric(a, b).first, wg_metric(b, a).first);
        EXPECT_LE(wg_metric(a, c).first, wg_metric(a, b).first + wg_metric(b, c).first + 1e-9);
    }
}

TEST(GmmGeodesic, EndpointsAndLinearity) {
    std::mt19937_64 g(36);
    for (int t = 0; t < 100; ++t) {
        const Gmm p = testutil::random_gmm(g);
        const Gmm q = testutil::random_gmm(g);
        const double d = wg_metric(p, q).first;
        const double eps = testutil::uniform(g, 0.0, 1.0);
        const Gmm s = gmm_geodesic(p, q, eps);
        EXPECT_NEAR(wg_metric(p, s).first, eps * d, 1e-6);
        EXPECT_NEAR(wg_metric(s, q).first, (1.0 - eps) * d, 1e-6);
        const double end = wg_metric(gmm_geodesic(p, q, 1.0), q).first;
        EXPECT_LE(end * end, 1e-12);
    }
}

TEST(GmmGeodesic, SimpleSplit) {
    const Gaussian2 p(Vec2(0, 0), Mat2::Identity());
    const Gaussian2 q1(Vec2(-2, 0), Mat2::Identity());
    const Gaussian2 q2(Vec2(2, 0), Mat2::Identity());
    const Gmm mid = gmm_geodesic(Gmm(p), Gmm({q1, q2}, {0.5, 0.5}), 0.5);
    ASSERT_EQ(mid.size(), 2u);
    EXPECT_NEAR(mid.component(0).mean().x(), -1.0, 1e-12);
    EXPECT_NEAR(mid.component(1).mean().x(), 1.0, 1e-12);
    EXPECT_NEAR(mid.weight(0), 0.5, 1e-12);
}
