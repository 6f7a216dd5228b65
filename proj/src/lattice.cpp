#include "ppm/lattice.hpp"

#include "ppm/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ppm {

bool contains(const Polygon& polygon, const Vec2& p) {
    const auto& v = polygon.vertices;
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        const bool crosses = (v[i].y() > p.y()) != (v[j].y() > p.y());
        if (crosses) {
            const double x_at = v[j].x() + (p.y() - v[j].y()) * (v[i].x() - v[j].x()) / (v[i].y() - v[j].y());
            if (p.x() < x_at) inside = !inside;
        }
    }
    return inside;
}

bool contains(const Region& region, const Vec2& p) {
    return std::visit(
        [&](const auto& r) -> bool {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Rectangle>) {
                return p.x() >= r.x_min && p.x() <= r.x_max && p.y() >= r.y_min && p.y() <= r.y_max;
            } else {
                return contains(r, p);
            }
        },
        region);
}

Rectangle bounding_box(const Region& region) {
    return std::visit(
        [](const auto& r) -> Rectangle {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Rectangle>) {
                return r;
            } else {
                Rectangle box{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                              std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
                for (const auto& v : r.vertices) {
                    box.x_min = std::min(box.x_min, v.x());
                    box.y_min = std::min(box.y_min, v.y());
                    box.x_max = std::max(box.x_max, v.x());
                    box.y_max = std::max(box.y_max, v.y());
                }
                return box;
            }
        },
        region);
}

namespace {

bool excluded(std::span<const Polygon> exclusions, const Vec2& p) {
    return std::any_of(exclusions.begin(), exclusions.end(), [&](const Polygon& e) { return contains(e, p); });
}

}  // namespace

PointSet build_grid(const Region& region, double dx, std::span<const Polygon> exclusions) {
    if (!(dx > 0.0)) throw ConfigError(fmt::format("lattice spacing must be positive, got {}", dx));
    if (const auto* poly = std::get_if<Polygon>(&region); poly && poly->vertices.size() < 3)
        throw ConfigError("polygonal region needs at least three vertices");

    const Rectangle box = bounding_box(region);
    const double width = box.x_max - box.x_min;
    const double height = box.y_max - box.y_min;
    if (!(width > 0.0) || !(height > 0.0))
        throw ConfigError(fmt::format("degenerate region {} x {}", width, height));

    // Cells that fit the box up to rounding.
    const int nx = std::max(1, static_cast<int>(std::ceil(width / dx - 1e-9)));
    const int ny = std::max(1, static_cast<int>(std::ceil(height / dx - 1e-9)));

    PointSet pts;
    pts.spacing = dx;
    pts.origin = Vec2(box.x_min, box.y_min);

    std::vector<int> index(static_cast<std::size_t>(nx) * ny, -1);
    std::vector<std::uint8_t> removed(static_cast<std::size_t>(nx) * ny, 0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 c = pts.origin + Vec2((i + 0.5) * dx, (j + 0.5) * dx);
            if (!contains(region, c)) continue;
            if (excluded(exclusions, c)) {
                removed[static_cast<std::size_t>(j) * nx + i] = 1;
                continue;
            }
            index[static_cast<std::size_t>(j) * nx + i] = static_cast<int>(pts.positions.size());
            pts.positions.push_back(c);
            pts.volumes.push_back(dx * dx);
            pts.cells.push_back({i, j});
        }
    }
    if (pts.positions.empty())
        throw ConfigError(fmt::format("region contains no lattice cell centre at spacing {}", dx));

    const std::size_t n = pts.positions.size();
    pts.densities.assign(n, 0.0);
    pts.faces.assign(n, kFaceNone);
    pts.excluded_faces.assign(n, kFaceNone);

    const std::array<std::pair<std::array<int, 2>, Face>, 4> dirs{{
        {{-1, 0}, kFaceXMinus},
        {{1, 0}, kFaceXPlus},
        {{0, -1}, kFaceYMinus},
        {{0, 1}, kFaceYPlus},
    }};
    for (std::size_t p = 0; p < n; ++p) {
        for (const auto& [d, face] : dirs) {
            const int i = pts.cells[p][0] + d[0];
            const int j = pts.cells[p][1] + d[1];
            const bool in_range = i >= 0 && i < nx && j >= 0 && j < ny;
            const std::size_t k = in_range ? static_cast<std::size_t>(j) * nx + i : 0;
            if (!in_range || index[k] < 0) {
                pts.faces[p] |= face;
                if (in_range && removed[k]) pts.excluded_faces[p] |= face;
            }
        }
    }
    return pts;
}

void assign_solid_density(PointSet& points, double intrinsic_density, double porosity) {
    assign_partial_density(points, (1.0 - porosity) * intrinsic_density, porosity);
}

void assign_partial_density(PointSet& points, double partial_density, double porosity) {
    if (!(partial_density > 0.0)) throw ConfigError("partial density must be positive");
    if (porosity < 0.0 || porosity >= 1.0) throw ConfigError("porosity must lie in [0, 1)");
    points.porosity0 = porosity;
    std::fill(points.densities.begin(), points.densities.end(), partial_density);
}

double influence(InfluenceKind kind, double r, double horizon) {
    if (r > horizon) return 0.0;
    switch (kind) {
        case InfluenceKind::Constant:
            return 1.0;
        case InfluenceKind::CubicSpline: {
            const double q = r / horizon;
            return q <= 0.5 ? 1.0 - 6.0 * q * q + 6.0 * q * q * q : 2.0 * (1.0 - q) * (1.0 - q) * (1.0 - q);
        }
    }
    return 0.0;
}

ShapeTensor shape_tensor(std::span<const Vec2> bonds, std::span<const double> weights) {
    ShapeTensor out;
    for (std::size_t b = 0; b < bonds.size(); ++b) out.K += weights[b] * bonds[b] * bonds[b].transpose();
    const double scale = out.K.trace();
    const double det = out.K.determinant();
    // Relative test: collinear bond sets give det = 0 up to rounding.
    out.degenerate = !(scale > 0.0) || det <= 1e-12 * scale * scale;
    if (!out.degenerate) out.K_inv = out.K.inverse();
    return out;
}

void update_shape_tensors(Family& family) {
    const std::size_t n = family.size();
    family.shape.assign(n, Mat2::Zero());
    family.shape_inv.assign(n, Mat2::Zero());
    family.degenerate.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b0 = family.begin(i);
        const auto cnt = family.family_size(i);
        const ShapeTensor st = shape_tensor(std::span(family.bonds).subspan(b0, cnt),
                                            std::span(family.weight).subspan(b0, cnt));
        family.shape[i] = st.K;
        family.shape_inv[i] = st.K_inv;
        family.degenerate[i] = st.degenerate ? 1 : 0;
    }
}

std::vector<std::size_t> Family::degenerate_points() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < degenerate.size(); ++i)
        if (degenerate[i]) out.push_back(i);
    return out;
}

Family build_families(const PointSet& points, double horizon, const FamilyOptions& options) {
    if (!(horizon >= points.spacing * (1.0 - 1e-12)))
        throw ConfigError(fmt::format("horizon {} is smaller than the lattice spacing {}", horizon, points.spacing));

    const std::size_t n = points.size();
    const double dx = points.spacing;
    const double reach = horizon * (1.0 + 1e-9);

    // Uniform bins of edge `horizon`; each query scans the 3x3 block around its bin.
    Vec2 lo = points.positions.front();
    Vec2 hi = lo;
    for (const auto& p : points.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const int bx = static_cast<int>((hi.x() - lo.x()) / horizon) + 1;
    const int by = static_cast<int>((hi.y() - lo.y()) / horizon) + 1;
    auto bin_of = [&](const Vec2& p) {
        const int i = std::min(bx - 1, static_cast<int>((p.x() - lo.x()) / horizon));
        const int j = std::min(by - 1, static_cast<int>((p.y() - lo.y()) / horizon));
        return std::array<int, 2>{i, j};
    };
    std::vector<std::size_t> bin_start(static_cast<std::size_t>(bx) * by + 1, 0);
    for (const auto& p : points.positions) {
        const auto b = bin_of(p);
        ++bin_start[static_cast<std::size_t>(b[1]) * bx + b[0] + 1];
    }
    for (std::size_t k = 1; k < bin_start.size(); ++k) bin_start[k] += bin_start[k - 1];
    std::vector<std::uint32_t> binned(n);
    {
        auto fill = bin_start;
        for (std::size_t p = 0; p < n; ++p) {
            const auto b = bin_of(points.positions[p]);
            binned[fill[static_cast<std::size_t>(b[1]) * bx + b[0]]++] = static_cast<std::uint32_t>(p);
        }
    }

    Family fam;
    fam.horizon = horizon;
    fam.offsets.assign(n + 1, 0);
    std::vector<std::uint32_t> scratch;
    for (std::size_t p = 0; p < n; ++p) {
        scratch.clear();
        const Vec2& xp = points.positions[p];
        const auto b = bin_of(xp);
        for (int j = std::max(0, b[1] - 1); j <= std::min(by - 1, b[1] + 1); ++j) {
            for (int i = std::max(0, b[0] - 1); i <= std::min(bx - 1, b[0] + 1); ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * bx + i;
                for (std::size_t s = bin_start[k]; s < bin_start[k + 1]; ++s) {
                    const std::uint32_t q = binned[s];
                    if (q == p) continue;
                    if ((points.positions[q] - xp).norm() <= reach) scratch.push_back(q);
                }
            }
        }
        // Fixed neighbour order keeps every reduction deterministic.
        std::sort(scratch.begin(), scratch.end());
        for (const auto q : scratch) {
            const Vec2 xi = points.positions[q] - xp;
            const double r = xi.norm();
            double beta = 1.0;
            if (options.volume_correction && r > horizon - 0.5 * dx)
                beta = std::clamp((horizon + 0.5 * dx - r) / dx, 0.0, 1.0);
            const double w = influence(options.influence, std::min(r, horizon), horizon);
            fam.neighbors.push_back(q);
            fam.bonds.push_back(xi);
            fam.omega.push_back(w);
            fam.volume_factor.push_back(beta);
            fam.weight.push_back(w * beta * points.volumes[q]);
        }
        fam.offsets[p + 1] = fam.neighbors.size();
    }
    update_shape_tensors(fam);
    return fam;
}

LatticeReport make_report(const PointSet& points, const Family& family) {
    LatticeReport rep;
    rep.points = points.size();
    rep.bonds = family.bond_count();
    for (std::size_t i = 0; i < family.size(); ++i) {
        const std::size_t k = family.family_size(i);
        if (rep.histogram.size() <= k) rep.histogram.resize(k + 1, 0);
        ++rep.histogram[k];
        if (k == 0) rep.isolated.push_back(i);
    }
    rep.degenerate = family.degenerate_points();
    return rep;
}

void write_report(std::ostream& os, const LatticeReport& report) {
    os << "points " << report.points << '\n';
    os << "bonds " << report.bonds << '\n';
    os << "family_size_histogram\n";
    for (std::size_t k = 0; k < report.histogram.size(); ++k)
        if (report.histogram[k] > 0) os << "  " << k << ' ' << report.histogram[k] << '\n';
    os << "isolated " << report.isolated.size() << '\n';
    for (auto i : report.isolated) os << "  " << i << '\n';
    os << "degenerate " << report.degenerate.size() << '\n';
    for (auto i : report.degenerate) os << "  " << i << '\n';
}

}  // namespace ppm
