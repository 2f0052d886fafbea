#pragma once

#include <cstdint>
#include <random>

#include "adoc/gmm.hpp"

namespace adoc {

/// Identity string written into run summaries.
inline constexpr const char* kRngIdentity = "mt19937_64 seeded by splitmix64(seed, stream); normals via Box-Muller";

/// One step of the splitmix64 sequence.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t& state);

/// Named substreams so that adding draws to one consumer does not shift another.
enum class RngStream : std::uint64_t { init = 1, targets = 2, sensing = 3 };

/// mt19937_64 with portable uniform and normal draws (std distributions are
/// implementation-defined, so they are avoided for reproducibility).
class Rng {
public:
    Rng(std::uint64_t seed, RngStream stream);

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal.
    double normal();

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// One draw from a mixture: component by weight, then mean + L z.
[[nodiscard]] Vec2 sample_gmm(const Gmm& m, Rng& rng);

}  // namespace adoc
