#include "adoc/rng.hpp"

#include <cmath>
#include <numbers>

namespace adoc {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, RngStream stream) {
    std::uint64_t s = seed ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL);
    engine_.seed(splitmix64(s));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Vec2 sample_gmm(const Gmm& m, Rng& rng) {
    const double u = rng.uniform();
    std::size_t k = m.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        acc += m.weight(i);
        if (u < acc) {
            k = i;
            break;
        }
    }
    const Gaussian2& g = m.component(k);
    const Eigen::LLT<Mat2> llt(g.cov());
    const double z0 = rng.normal();
    const double z1 = rng.normal();
    return g.mean() + llt.matrixL() * Vec2(z0, z1);
}

}  // namespace adoc
