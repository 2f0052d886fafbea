#include "adoc/world_map.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "adoc/error.hpp"

namespace adoc {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const Vec2 ap = p - a;
    if (std::abs(cross(ab, ap)) > 1e-12 * (1.0 + ab.norm())) return false;
    const double t = ap.dot(ab);
    return t >= 0.0 && t <= ab.squaredNorm();
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const double d1 = cross(q2 - q1, p1 - q1);
    const double d2 = cross(q2 - q1, p2 - q1);
    const double d3 = cross(p2 - p1, q1 - p1);
    const double d4 = cross(p2 - p1, q2 - p1);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    return on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2);
}

double logistic(double f) { return 1.0 / (1.0 + std::exp(-f)); }

}  // namespace

Vec2 Roi::clamp(const Vec2& p) const { return {std::clamp(p.x(), 0.0, lx), std::clamp(p.y(), 0.0, ly)}; }

bool point_in_polygon(const Vec2& p, const Polygon& poly) {
    const std::size_t n = poly.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if (on_segment(p, a, b)) return true;
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool is_simple_polygon(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
        }
    }
    return true;
}

GroundTruthWorld::GroundTruthWorld(Roi roi, std::vector<Polygon> obstacles)
    : roi_(roi), obstacles_(std::move(obstacles)) {
    if (!(roi_.lx > 0.0 && roi_.ly > 0.0)) throw Error(ErrorCode::invalid_scenario, "roi extents must be positive");
    for (const auto& poly : obstacles_) {
        for (const auto& v : poly) {
            if (!roi_.contains(v)) throw Error(ErrorCode::invalid_scenario, "obstacle vertex outside the roi");
        }
        if (!is_simple_polygon(poly)) throw Error(ErrorCode::invalid_scenario, "obstacle polygon is not simple");
    }
}

bool GroundTruthWorld::occupied(const Vec2& p) const {
    return std::any_of(obstacles_.begin(), obstacles_.end(), [&](const Polygon& poly) { return point_in_polygon(p, poly); });
}

ObstacleMap::ObstacleMap(Roi roi, double spacing, const std::vector<Polygon>& prior) : roi_(roi), dx_(spacing) {
    if (!(spacing > 0.0)) throw Error(ErrorCode::invalid_parameter, "grid spacing must be positive");
    nx_ = static_cast<int>(std::lround(roi.lx / spacing));
    ny_ = static_cast<int>(std::lround(roi.ly / spacing));
    if (nx_ < 1 || ny_ < 1 || std::abs(nx_ * spacing - roi.lx) > 1e-9 * roi.lx ||
        std::abs(ny_ * spacing - roi.ly) > 1e-9 * roi.ly) {
        throw Error(ErrorCode::invalid_parameter, "roi extents must be multiples of the grid spacing");
    }
    const std::size_t count = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    logit_.assign(count, -kPriorLogit);
    binary_.assign(count, 0);
    observed_.assign(count, 0);
    for (std::size_t c = 0; c < count; ++c) {
        const Vec2 p = center(c);
        for (const auto& poly : prior) {
            if (point_in_polygon(p, poly)) {
                logit_[c] = kPriorLogit;
                binary_[c] = 1;
                break;
            }
        }
    }
}

Vec2 ObstacleMap::center(std::size_t cell) const {
    const int ix = static_cast<int>(cell % static_cast<std::size_t>(nx_));
    const int iy = static_cast<int>(cell / static_cast<std::size_t>(nx_));
    return center(ix, iy);
}

double ObstacleMap::h(std::size_t cell) const { return logistic(logit_[cell]); }

void ObstacleMap::refresh(std::size_t cell, ObserveResult* result) {
    const std::uint8_t now = h(cell) > 0.5 ? 1 : 0;
    if (now == binary_[cell]) return;
    binary_[cell] = now;
    ++version_;
    if (result != nullptr) (now ? result->flipped_to_occupied : result->flipped_to_free).push_back(cell);
}

void ObstacleMap::set_logit(std::size_t cell, double value) {
    logit_.at(cell) = value;
    refresh(cell, nullptr);
}

std::vector<std::uint8_t> ObstacleMap::rasterize(const GroundTruthWorld& world) const {
    std::vector<std::uint8_t> truth(cell_count(), 0);
    for (std::size_t c = 0; c < truth.size(); ++c) truth[c] = world.occupied(center(c)) ? 1 : 0;
    return truth;
}

ObserveResult ObstacleMap::observe(const std::vector<std::uint8_t>& truth, const FovSet& fov, double flip_probability,
                                   std::mt19937_64* rng) {
    if (truth.size() != cell_count()) throw Error(ErrorCode::invalid_parameter, "truth raster has the wrong size");
    if (!(fov.radius > 0.0)) throw Error(ErrorCode::invalid_parameter, "fov radius must be positive");
    ObserveResult result;
    const double r2 = fov.radius * fov.radius;
    for (Vec2 c : fov.centers) {
        if (!roi_.contains(c)) {
            c = roi_.clamp(c);
            ++result.clamped_centers;
        }
        const int ix0 = std::max(0, static_cast<int>(std::floor((c.x() - fov.radius) / dx_)));
        const int ix1 = std::min(nx_ - 1, static_cast<int>(std::floor((c.x() + fov.radius) / dx_)));
        const int iy0 = std::max(0, static_cast<int>(std::floor((c.y() - fov.radius) / dx_)));
        const int iy1 = std::min(ny_ - 1, static_cast<int>(std::floor((c.y() + fov.radius) / dx_)));
        for (int iy = iy0; iy <= iy1; ++iy) {
            for (int ix = ix0; ix <= ix1; ++ix) {
                if ((center(ix, iy) - c).squaredNorm() > r2) continue;
                const std::size_t cell = index(ix, iy);
                bool occ = truth[cell] != 0;
                if (flip_probability > 0.0 && rng != nullptr) {
                    // 53-bit uniform in [0, 1), independent of the standard library's distributions.
                    const double u = static_cast<double>((*rng)() >> 11) * 0x1.0p-53;
                    if (u < flip_probability) occ = !occ;
                }
                logit_[cell] = occ ? kObservedLogit : -kObservedLogit;
                observed_[cell] = 1;
                ++result.observed_cells;
                refresh(cell, &result);
            }
        }
    }
    return result;
}

bool ObstacleMap::nearest_occupied(const Vec2& p, double max_range, Vec2& out) const {
    const int ix0 = std::max(0, static_cast<int>(std::floor((p.x() - max_range) / dx_)));
    const int ix1 = std::min(nx_ - 1, static_cast<int>(std::floor((p.x() + max_range) / dx_)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((p.y() - max_range) / dx_)));
    const int iy1 = std::min(ny_ - 1, static_cast<int>(std::floor((p.y() + max_range) / dx_)));
    double best = max_range * max_range;
    bool found = false;
    for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
            if (!binary_[index(ix, iy)]) continue;
            const Vec2 c = center(ix, iy);
            const double d2 = (c - p).squaredNorm();
            if (d2 <= best) {
                // strict improvement only, so the lowest (iy, ix) wins ties
                if (found && d2 == best) continue;
                best = d2;
                out = c;
                found = true;
            }
        }
    }
    return found;
}

std::size_t ObstacleMap::cell_of(const Vec2& p) const {
    const int ix = std::clamp(static_cast<int>(std::floor(p.x() / dx_)), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(p.y() / dx_)), 0, ny_ - 1);
    return index(ix, iy);
}

void ObstacleMap::write_pgm(std::ostream& os) const {
    os << "P2\n" << nx_ << ' ' << ny_ << "\n1\n";
    for (int iy = ny_ - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < nx_; ++ix) {
            if (ix) os << ' ';
            os << static_cast<int>(binary_[index(ix, iy)]);
        }
        os << '\n';
    }
}

ObstacleMap observe_and_update(const ObstacleMap& map, const GroundTruthWorld& world, const FovSet& fov) {
    ObstacleMap next = map;
    next.observe(next.rasterize(world), fov);
    return next;
}

std::vector<std::uint8_t> binary_map(const ObstacleMap& map) {
    std::vector<std::uint8_t> out(map.cell_count());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = map.h(c) > 0.5 ? 1 : 0;
    return out;
}

double gaussian_map_inner(const Gaussian2& g, const ObstacleMap& map, const std::vector<std::uint8_t>& binary) {
    const double dx = map.spacing();
    const Mat2& cov = g.cov();
    // Beyond 8 marginal standard deviations the density is below e^-32 of its peak.
    const double hx = 8.0 * std::sqrt(cov(0, 0));
    const double hy = 8.0 * std::sqrt(cov(1, 1));
    const Vec2& mu = g.mean();
    const int ix0 = std::max(0, static_cast<int>(std::floor((mu.x() - hx) / dx)));
    const int ix1 = std::min(map.nx() - 1, static_cast<int>(std::floor((mu.x() + hx) / dx)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((mu.y() - hy) / dx)));
    const int iy1 = std::min(map.ny() - 1, static_cast<int>(std::floor((mu.y() + hy) / dx)));
    double acc = 0.0;
    for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
            if (!binary[map.index(ix, iy)]) continue;
            acc += g.pdf(map.center(ix, iy));
        }
    }
    return acc * dx * dx;
}

double gaussian_map_inner(const Gaussian2& g, const ObstacleMap& map) {
    return gaussian_map_inner(g, map, map.binary());
}

double occupied_length(const ObstacleMap& map, const Vec2& a, const Vec2& b) {
    const double len = (b - a).norm();
    if (len == 0.0) return 0.0;
    const int samples = std::max(1, static_cast<int>(std::ceil(len / (0.25 * map.spacing()))));
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
        const double t = (s + 0.5) / samples;
        if (map.occupied(map.cell_of(a + t * (b - a)))) ++hits;
    }
    return len * hits / samples;
}

}  // namespace adoc
