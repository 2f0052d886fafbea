#pragma once

#include <vector>

#include "adoc/gaussian.hpp"

namespace adoc {

inline constexpr double kWeightSumTolerance = 1e-9;
inline constexpr double kDefaultOmegaTh = 1e-4;

/// Weighted mixture of Gaussian2 components.
///
/// Invariants (checked on construction, ErrorCode::invalid_parameter otherwise):
/// non-empty, equal lengths, weights in [0, 1] and summing to 1 within 1e-9.
class Gmm {
public:
    Gmm(std::vector<Gaussian2> components, std::vector<double> weights);

    /// Single-component mixture with weight 1.
    explicit Gmm(const Gaussian2& g);

    [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
    [[nodiscard]] const std::vector<Gaussian2>& components() const noexcept { return components_; }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
    [[nodiscard]] const Gaussian2& component(std::size_t i) const { return components_.at(i); }
    [[nodiscard]] double weight(std::size_t i) const { return weights_.at(i); }

    [[nodiscard]] double pdf(const Vec2& x) const;

    friend bool operator==(const Gmm& a, const Gmm& b) {
        return a.components_ == b.components_ && a.weights_ == b.weights_;
    }

private:
    std::vector<Gaussian2> components_;
    std::vector<double> weights_;
};

/// Drops components whose weight is below omega_th and renormalizes the rest.
/// Throws would_empty_mixture when omega_th >= max weight.
[[nodiscard]] Gmm prune_and_renormalize(const Gmm& m, double omega_th = kDefaultOmegaTh);

/// Merges bitwise-identical components by summing their weights; first occurrence keeps its slot.
[[nodiscard]] Gmm merge_identical(const Gmm& m);

}  // namespace adoc
