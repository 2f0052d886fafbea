#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "adoc/gaussian.hpp"

namespace adoc {

/// Axis-aligned region of interest [0, lx] x [0, ly] (km).
struct Roi {
    double lx = 0.0;
    double ly = 0.0;

    [[nodiscard]] bool contains(const Vec2& p) const {
        return p.x() >= 0.0 && p.x() <= lx && p.y() >= 0.0 && p.y() <= ly;
    }
    [[nodiscard]] Vec2 clamp(const Vec2& p) const;
};

using Polygon = std::vector<Vec2>;

/// Even-odd point-in-polygon test; points on an edge count as inside.
[[nodiscard]] bool point_in_polygon(const Vec2& p, const Polygon& poly);

/// True when no two non-adjacent edges of `poly` intersect.
[[nodiscard]] bool is_simple_polygon(const Polygon& poly);

/// The real obstacle layout. Validated on construction (invalid_scenario).
class GroundTruthWorld {
public:
    GroundTruthWorld(Roi roi, std::vector<Polygon> obstacles);

    [[nodiscard]] const Roi& roi() const noexcept { return roi_; }
    [[nodiscard]] const std::vector<Polygon>& obstacles() const noexcept { return obstacles_; }
    [[nodiscard]] bool occupied(const Vec2& p) const;

private:
    Roi roi_;
    std::vector<Polygon> obstacles_;
};

/// Disc fields of view, one per robot.
struct FovSet {
    std::vector<Vec2> centers;
    double radius = 1.0;
};

struct ObserveResult {
    std::size_t observed_cells = 0;
    std::size_t clamped_centers = 0;                 ///< centers outside the roi that were clamped
    std::vector<std::size_t> flipped_to_occupied;    ///< cell indices whose binary value went 0 -> 1
    std::vector<std::size_t> flipped_to_free;        ///< cell indices whose binary value went 1 -> 0
};

/// Logit occupancy grid h = logistic(f) over cell centers with binary view m = [h > 0.5].
///
/// Cells are indexed ix + nx * iy with centers ((ix + 0.5) dx, (iy + 0.5) dx).
/// Observed cells get logit +/-kObservedLogit, prior polygons +/-kPriorLogit.
class ObstacleMap {
public:
    static constexpr double kObservedLogit = 10.0;
    static constexpr double kPriorLogit = 2.0;

    ObstacleMap(Roi roi, double spacing, const std::vector<Polygon>& prior = {});

    [[nodiscard]] const Roi& roi() const noexcept { return roi_; }
    [[nodiscard]] double spacing() const noexcept { return dx_; }
    [[nodiscard]] int nx() const noexcept { return nx_; }
    [[nodiscard]] int ny() const noexcept { return ny_; }
    [[nodiscard]] std::size_t cell_count() const noexcept { return logit_.size(); }
    [[nodiscard]] std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(ix) + static_cast<std::size_t>(nx_) * static_cast<std::size_t>(iy);
    }
    [[nodiscard]] Vec2 center(std::size_t cell) const;
    [[nodiscard]] Vec2 center(int ix, int iy) const { return {(ix + 0.5) * dx_, (iy + 0.5) * dx_}; }

    [[nodiscard]] double logit(std::size_t cell) const { return logit_[cell]; }
    [[nodiscard]] double h(std::size_t cell) const;
    [[nodiscard]] bool occupied(std::size_t cell) const { return binary_[cell] != 0; }
    [[nodiscard]] bool observed(std::size_t cell) const { return observed_[cell] != 0; }
    [[nodiscard]] const std::vector<std::uint8_t>& binary() const noexcept { return binary_; }
    /// Incremented whenever any binary value flips.
    [[nodiscard]] std::uint64_t version() const noexcept { return version_; }

    /// Overwrite one logit (tests, learned backends). Keeps the binary view in sync.
    void set_logit(std::size_t cell, double value);

    /// Ground-truth occupancy of every cell center, for repeated observation.
    [[nodiscard]] std::vector<std::uint8_t> rasterize(const GroundTruthWorld& world) const;

    /// Reveal every cell whose center is within the fov radius of a fov center.
    /// `flip_probability` > 0 corrupts each observed value with that probability using `rng`.
    ObserveResult observe(const std::vector<std::uint8_t>& truth, const FovSet& fov, double flip_probability = 0.0,
                          std::mt19937_64* rng = nullptr);

    /// Nearest occupied cell center within `max_range` of p, if any.
    [[nodiscard]] bool nearest_occupied(const Vec2& p, double max_range, Vec2& out) const;

    /// Cell containing p (clamped to the grid).
    [[nodiscard]] std::size_t cell_of(const Vec2& p) const;

    /// Plain-text PGM ("P2", maxval 1) of the binary view, top row = largest y.
    void write_pgm(std::ostream& os) const;

private:
    void refresh(std::size_t cell, ObserveResult* result);

    Roi roi_;
    double dx_;
    int nx_;
    int ny_;
    std::vector<double> logit_;
    std::vector<std::uint8_t> binary_;
    std::vector<std::uint8_t> observed_;
    std::uint64_t version_ = 0;
};

/// Functional form of ObstacleMap::observe for a fresh truth raster.
[[nodiscard]] ObstacleMap observe_and_update(const ObstacleMap& map, const GroundTruthWorld& world, const FovSet& fov);

/// Cellwise indicator h > 0.5 (strict).
[[nodiscard]] std::vector<std::uint8_t> binary_map(const ObstacleMap& map);

/// Riemann sum over cells of pdf_g(center) * m(cell) * dx * dy.
[[nodiscard]] double gaussian_map_inner(const Gaussian2& g, const ObstacleMap& map);

/// Same inner product against an explicit binary grid with the map's geometry.
[[nodiscard]] double gaussian_map_inner(const Gaussian2& g, const ObstacleMap& map,
                                        const std::vector<std::uint8_t>& binary);

/// Length (km) of the segment a-b that runs through occupied cells, sampled at dx / 4.
[[nodiscard]] double occupied_length(const ObstacleMap& map, const Vec2& a, const Vec2& b);

}  // namespace adoc
