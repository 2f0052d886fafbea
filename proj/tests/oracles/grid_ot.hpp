#pragma once

// W2 between two Gaussians by discrete optimal transport on a shared grid.
// Both densities are sampled at the centers of a cells x cells grid spanning
// +/- 4 marginal standard deviations around each, cells carrying less than
// 1e-10 of the mass are dropped and the rest renormalized.

#include <algorithm>
#include <cmath>
#include <vector>

#include "adoc/gaussian.hpp"
#include "network_simplex.hpp"

namespace oracle {

struct GridOtResult {
    double w2 = 0.0;
    std::size_t support_p = 0;
    std::size_t support_q = 0;
};

inline GridOtResult grid_w2(const adoc::Gaussian2& p, const adoc::Gaussian2& q, int cells = 40) {
    double lo[2];
    double hi[2];
    for (int a = 0; a < 2; ++a) {
        const double sp = 4.0 * std::sqrt(p.cov()(a, a));
        const double sq = 4.0 * std::sqrt(q.cov()(a, a));
        lo[a] = std::min(p.mean()[a] - sp, q.mean()[a] - sq);
        hi[a] = std::max(p.mean()[a] + sp, q.mean()[a] + sq);
    }
    const double hx = (hi[0] - lo[0]) / cells;
    const double hy = (hi[1] - lo[1]) / cells;
    std::vector<adoc::Vec2> centers;
    for (int iy = 0; iy < cells; ++iy) {
        for (int ix = 0; ix < cells; ++ix) centers.emplace_back(lo[0] + (ix + 0.5) * hx, lo[1] + (iy + 0.5) * hy);
    }
    auto support = [&](const adoc::Gaussian2& g, std::vector<adoc::Vec2>& pts, std::vector<double>& mass) {
        std::vector<double> w(centers.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < centers.size(); ++k) sum += w[k] = g.pdf(centers[k]);
        double kept = 0.0;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (w[k] / sum < 1e-10) continue;
            pts.push_back(centers[k]);
            mass.push_back(w[k]);
            kept += w[k];
        }
        for (double& v : mass) v /= kept;
    };
    std::vector<adoc::Vec2> xp;
    std::vector<adoc::Vec2> xq;
    std::vector<double> mp;
    std::vector<double> mq;
    support(p, xp, mp);
    support(q, xq, mq);
    NetworkSimplex ns(mp, mq, [&](std::size_t i, std::size_t j) { return (xp[i] - xq[j]).squaredNorm(); });
    GridOtResult r;
    r.w2 = std::sqrt(std::max(0.0, ns.solve()));
    r.support_p = xp.size();
    r.support_q = xq.size();
    return r;
}

}  // namespace oracle
