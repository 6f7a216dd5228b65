#pragma once

#include "ppm/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ppm {

struct Rectangle {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
};

/// Simple (non self-intersecting) polygon, vertices in either orientation.
struct Polygon {
    std::vector<Vec2> vertices;
};

using Region = std::variant<Rectangle, Polygon>;

bool contains(const Region& region, const Vec2& p);
bool contains(const Polygon& polygon, const Vec2& p);
Rectangle bounding_box(const Region& region);

/// Exposed lattice faces of a point: the neighbouring cell across that face
/// holds no material point.
enum Face : std::uint8_t {
    kFaceNone = 0,
    kFaceXMinus = 1,
    kFaceXPlus = 2,
    kFaceYMinus = 4,
    kFaceYPlus = 8,
};

/// Reference discretization. Volumes carry a unit out-of-plane thickness.
struct PointSet {
    double spacing = 0.0;
    double porosity0 = 0.0;
    Vec2 origin = Vec2::Zero();  // lower-left corner of cell (0, 0)
    std::vector<Vec2> positions;
    std::vector<double> volumes;
    std::vector<double> densities;  // partial density of the solid skeleton
    std::vector<std::array<int, 2>> cells;
    std::vector<std::uint8_t> faces;
    /// Points whose cell was exposed by an exclusion region (e.g. an eroded toe),
    /// together with the exposed face mask toward that region.
    std::vector<std::uint8_t> excluded_faces;

    std::size_t size() const { return positions.size(); }
};

/// Cell-centred lattice of spacing `dx` clipped to `region`; cells whose centre
/// falls inside any of `exclusions` are dropped. Clipped cells keep the full
/// dx^2 volume.
PointSet build_grid(const Region& region, double dx, std::span<const Polygon> exclusions = {});

/// Partial density rho_s = (1 - porosity) * rho_intrinsic on every point.
void assign_solid_density(PointSet& points, double intrinsic_density, double porosity);
/// Partial density given directly.
void assign_partial_density(PointSet& points, double partial_density, double porosity);

enum class InfluenceKind { Constant, CubicSpline };

double influence(InfluenceKind kind, double r, double horizon);

struct FamilyOptions {
    InfluenceKind influence = InfluenceKind::Constant;
    bool volume_correction = true;
};

/// Neighbour families in compressed-row layout. Built once in the reference
/// configuration; immutable afterward.
struct Family {
    double horizon = 0.0;
    std::vector<std::size_t> offsets;  // size N + 1
    std::vector<std::uint32_t> neighbors;
    std::vector<Vec2> bonds;             // xi = x_j - x_i
    std::vector<double> omega;           // influence per bond
    std::vector<double> volume_factor;   // partial-volume correction per bond
    std::vector<double> weight;          // omega * volume_factor * V_j
    std::vector<Mat2> shape;             // K per point
    std::vector<Mat2> shape_inv;         // K^-1 per point (zero when degenerate)
    std::vector<std::uint8_t> degenerate;

    std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t begin(std::size_t i) const { return offsets[i]; }
    std::size_t end(std::size_t i) const { return offsets[i + 1]; }
    std::size_t family_size(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
    std::size_t bond_count() const { return neighbors.size(); }
    std::vector<std::size_t> degenerate_points() const;
};

/// All points within `horizon` of each point, found through uniform spatial bins.
Family build_families(const PointSet& points, double horizon, const FamilyOptions& options = {});

struct ShapeTensor {
    Mat2 K = Mat2::Zero();
    Mat2 K_inv = Mat2::Zero();
    bool degenerate = true;
};

/// K = sum omega (xi (x) xi) V over the supplied bonds.
ShapeTensor shape_tensor(std::span<const Vec2> bonds, std::span<const double> weights);

/// Recompute shape tensors for every point of a family (after editing weights).
void update_shape_tensors(Family& family);

struct LatticeReport {
    std::size_t points = 0;
    std::size_t bonds = 0;
    std::vector<std::size_t> histogram;  // histogram[k] = points with family size k
    std::vector<std::size_t> isolated;
    std::vector<std::size_t> degenerate;
};

LatticeReport make_report(const PointSet& points, const Family& family);
void write_report(std::ostream& os, const LatticeReport& report);

}  // namespace ppm
