#include "adoc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adoc/error.hpp"

namespace adoc {

Gmm::Gmm(std::vector<Gaussian2> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty()) throw Error(ErrorCode::invalid_parameter, "Gmm needs at least one component");
    if (components_.size() != weights_.size()) {
        throw Error(ErrorCode::invalid_parameter, "Gmm components and weights differ in length");
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::invalid_parameter, "Gmm weight outside [0, 1]");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
        throw Error(ErrorCode::invalid_parameter, "Gmm weights do not sum to 1");
    }
}

Gmm::Gmm(const Gaussian2& g) : components_{g}, weights_{1.0} {}

double Gmm::pdf(const Vec2& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += weights_[i] * components_[i].pdf(x);
    return acc;
}

Gmm prune_and_renormalize(const Gmm& m, double omega_th) {
    const auto& w = m.weights();
    const double max_w = *std::max_element(w.begin(), w.end());
    if (!(omega_th >= 0.0) || omega_th >= max_w) {
        throw Error(ErrorCode::would_empty_mixture, "omega_th would remove every component");
    }
    std::vector<Gaussian2> kept;
    std::vector<double> kept_w;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (w[i] >= omega_th) {
            kept.push_back(m.component(i));
            kept_w.push_back(w[i]);
        }
    }
    const double total = std::accumulate(kept_w.begin(), kept_w.end(), 0.0);
    for (double& x : kept_w) x /= total;
    return Gmm(std::move(kept), std::move(kept_w));
}

Gmm merge_identical(const Gmm& m) {
    std::vector<Gaussian2> out;
    std::vector<double> out_w;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto it = std::find(out.begin(), out.end(), m.component(i));
        if (it == out.end()) {
            out.push_back(m.component(i));
            out_w.push_back(m.weight(i));
        } else {
            out_w[static_cast<std::size_t>(it - out.begin())] += m.weight(i);
        }
    }
    for (double& x : out_w) x = std::min(x, 1.0);
    return Gmm(std::move(out), std::move(out_w));
}

}  // namespace adoc
