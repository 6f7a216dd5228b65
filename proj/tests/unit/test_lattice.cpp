#include "ppm/error.hpp"
#include "ppm/lattice.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace ppm;

namespace {

// Index of the lattice point nearest to `p`.
std::size_t nearest(const PointSet& pts, const Vec2& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if ((pts.positions[i] - p).norm() < (pts.positions[best] - p).norm()) best = i;
    return best;
}

// Integer offsets (i, j) with 0 < i^2 + j^2 <= r^2.
std::vector<std::pair<int, int>> stencil(int r) {
    std::vector<std::pair<int, int>> out;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j)
            if (i * i + j * j > 0 && i * i + j * j <= r * r) out.emplace_back(i, j);
    return out;
}

Polygon slope_profile() {
    return Polygon{{{0.0, 0.0}, {373.883, 0.0}, {335.7, 17.0}, {0.0, 17.0}}};
}

Polygon eroded_toe() {
    return Polygon{{{360.406, 0.0}, {373.883, 0.0}, {360.406, 6.0}}};
}

}  // namespace

TEST(Grid, RectangleCountsAndVolumes) {
    const PointSet pts = build_grid(Rectangle{0.0, 0.0, 30.0, 60.0}, 0.75);
    EXPECT_EQ(pts.size(), 3200u);
    for (double v : pts.volumes) EXPECT_DOUBLE_EQ(v, 0.5625);
    // Cell centres: first at dx/2, last at width - dx/2.
    double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
    for (const auto& p : pts.positions) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    EXPECT_DOUBLE_EQ(xmin, 0.375);
    EXPECT_DOUBLE_EQ(xmax, 29.625);
    EXPECT_DOUBLE_EQ(ymin, 0.375);
    EXPECT_DOUBLE_EQ(ymax, 59.625);
}

TEST(Grid, SingleCell) {
    const double h = 0.4;
    const PointSet pts = build_grid(Rectangle{1.0, 2.0, 1.0 + h, 2.0 + h}, h);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_NEAR(pts.positions[0].x(), 1.2, 1e-15);
    EXPECT_NEAR(pts.positions[0].y(), 2.2, 1e-15);
    EXPECT_DOUBLE_EQ(pts.volumes[0], h * h);
    EXPECT_EQ(pts.faces[0], kFaceXMinus | kFaceXPlus | kFaceYMinus | kFaceYPlus);
}

TEST(Grid, SlopeProfileCount) {
    const Polygon eroded = eroded_toe();
    const PointSet pts = build_grid(slope_profile(), 0.75, std::span(&eroded, 1));
    // The slope section is sized for about 10800 points at this spacing.
    EXPECT_NEAR(static_cast<double>(pts.size()), 10800.0, 0.01 * 10800.0);
    for (const auto& p : pts.positions) {
        EXPECT_TRUE(contains(slope_profile(), p));
        EXPECT_FALSE(contains(eroded, p));
    }
}

TEST(Grid, ErodedFacesAreFlagged) {
    const Polygon eroded = eroded_toe();
    const PointSet pts = build_grid(slope_profile(), 1.5, std::span(&eroded, 1));
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!pts.excluded_faces[i]) continue;
        ++flagged;
        // Exposed toward the removed toe: right or top faces only, and only near it.
        EXPECT_EQ(pts.excluded_faces[i] & (kFaceXMinus | kFaceYMinus), 0);
        EXPECT_GT(pts.positions[i].x(), 355.0);
        EXPECT_LT(pts.positions[i].y(), 8.0);
        EXPECT_EQ(pts.excluded_faces[i] & ~pts.faces[i], 0);
    }
    // Vertical cut of 6 m plus the stepped face of the triangle.
    EXPECT_GE(flagged, 4u);
}

TEST(Grid, RejectsBadInput) {
    EXPECT_THROW(build_grid(Rectangle{0, 0, 1, 1}, 0.0), ConfigError);
    EXPECT_THROW(build_grid(Rectangle{0, 0, 0, 1}, 0.1), ConfigError);
    EXPECT_THROW(build_grid(Polygon{{{0, 0}, {1, 0}}}, 0.1), ConfigError);
    // A sliver thinner than half a cell holds no cell centre.
    EXPECT_THROW(build_grid(Polygon{{{0, 0}, {10, 0}, {10, 0.01}}}, 1.0), ConfigError);
}

TEST(Grid, PartialDensity) {
    PointSet pts = build_grid(Rectangle{0, 0, 3, 3}, 1.0);
    assign_solid_density(pts, 2000.0, 0.2);
    for (double r : pts.densities) EXPECT_DOUBLE_EQ(r, 1600.0);
    assign_partial_density(pts, 1600.0, 0.2);
    for (double r : pts.densities) EXPECT_DOUBLE_EQ(r, 1600.0);
    EXPECT_THROW(assign_partial_density(pts, 1600.0, 1.0), ConfigError);
    EXPECT_THROW(assign_partial_density(pts, -1.0, 0.2), ConfigError);
}

TEST(Polygon, ContainsBothOrientations) {
    const Polygon ccw{{{0, 0}, {2, 0}, {2, 1}, {0, 1}}};
    const Polygon cw{{{0, 0}, {0, 1}, {2, 1}, {2, 0}}};
    for (const auto& poly : {ccw, cw}) {
        EXPECT_TRUE(contains(poly, Vec2(1.0, 0.5)));
        EXPECT_FALSE(contains(poly, Vec2(2.5, 0.5)));
        EXPECT_FALSE(contains(poly, Vec2(1.0, -0.1)));
    }
}

TEST(Families, InteriorStencilSizes) {
    const double dx = 0.5;
    const PointSet pts = build_grid(Rectangle{0, 0, 10, 10}, dx);
    const std::size_t c = nearest(pts, Vec2(5.25, 5.25));
    for (int r : {1, 2, 3}) {
        const Family fam = build_families(pts, r * dx, {InfluenceKind::Constant, false});
        EXPECT_EQ(fam.family_size(c), stencil(r).size()) << "horizon " << r << " dx";
    }
    EXPECT_EQ(stencil(3).size(), 28u);
    EXPECT_EQ(stencil(1).size(), 4u);
}

TEST(Families, CornerIsTruncatedToQuadrant) {
    const double dx = 0.75;
    const PointSet pts = build_grid(Rectangle{0, 0, 30, 60}, dx);
    const Family fam = build_families(pts, 3 * dx);
    const std::size_t corner = nearest(pts, Vec2(0, 0));
    EXPECT_LT(fam.family_size(corner), 28u);
    for (std::size_t b = fam.begin(corner); b < fam.end(corner); ++b) {
        EXPECT_GE(fam.bonds[b].x(), 0.0);
        EXPECT_GE(fam.bonds[b].y(), 0.0);
    }
    // Quarter-disc offsets with i, j >= 0 excluding the origin.
    std::size_t quadrant = 0;
    for (auto [i, j] : stencil(3))
        if (i >= 0 && j >= 0) ++quadrant;
    EXPECT_EQ(fam.family_size(corner), quadrant);
}

TEST(Families, BondInvariants) {
    const double dx = 1.0;
    const PointSet pts = build_grid(Polygon{{{0, 0}, {40, 0}, {25, 17}, {0, 17}}}, dx);
    const Family fam = build_families(pts, 3 * dx);
    std::map<std::pair<std::size_t, std::size_t>, Vec2> bonds;
    for (std::size_t i = 0; i < fam.size(); ++i) {
        for (std::size_t b = fam.begin(i); b < fam.end(i); ++b) {
            const std::size_t j = fam.neighbors[b];
            EXPECT_NE(i, j);
            const double r = fam.bonds[b].norm();
            EXPECT_GT(r, 0.0);
            EXPECT_LE(r, 3 * dx * (1 + 1e-9));
            EXPECT_GT(fam.volume_factor[b], 0.0);
            EXPECT_LE(fam.volume_factor[b], 1.0);
            bonds[{i, j}] = fam.bonds[b];
        }
    }
    for (const auto& [key, xi] : bonds) {
        const auto it = bonds.find({key.second, key.first});
        ASSERT_NE(it, bonds.end());
        EXPECT_EQ(it->second, Vec2(-xi));
    }
    for (std::size_t i = 0; i < fam.size(); ++i) {
        ASSERT_FALSE(fam.degenerate[i]);
        const Mat2& K = fam.shape[i];
        EXPECT_DOUBLE_EQ(K(0, 1), K(1, 0));
        EXPECT_GT(K.determinant(), 0.0);
        EXPECT_GT(K(0, 0), 0.0);
        EXPECT_LT((K * fam.shape_inv[i] - Mat2::Identity()).norm(), 1e-12);
    }
}

TEST(Families, RejectsHorizonBelowSpacing) {
    const PointSet pts = build_grid(Rectangle{0, 0, 4, 4}, 1.0);
    EXPECT_THROW(build_families(pts, 0.5), ConfigError);
}

TEST(ShapeTensor, InteriorStencilSum) {
    const double dx = 0.75;
    const PointSet pts = build_grid(Rectangle{0, 0, 15, 15}, dx);
    const Family fam = build_families(pts, 3 * dx, {InfluenceKind::Constant, false});
    const std::size_t c = nearest(pts, Vec2(7.5, 7.5));
    // Oracle: sum of i^2 over the stencil times dx^2 (bond) times dx^2 (volume).
    double sum_ii = 0.0, sum_ij = 0.0;
    for (auto [i, j] : stencil(3)) {
        sum_ii += i * i;
        sum_ij += i * j;
    }
    EXPECT_EQ(sum_ii, 68.0);
    const double dx4 = std::pow(dx, 4);
    EXPECT_NEAR(fam.shape[c](0, 0), sum_ii * dx4, 1e-12);
    EXPECT_NEAR(fam.shape[c](1, 1), sum_ii * dx4, 1e-12);
    EXPECT_NEAR(fam.shape[c](0, 1), sum_ij * dx4, 1e-12);
}

TEST(ShapeTensor, CollinearBondsAreDegenerate) {
    const double h = 0.3;
    const std::vector<Vec2> bonds{{h, 0}, {-h, 0}};
    const std::vector<double> w{h * h, h * h};
    const ShapeTensor st = shape_tensor(bonds, w);
    EXPECT_TRUE(st.degenerate);
    EXPECT_EQ(st.K_inv, Mat2::Zero());
}

TEST(ShapeTensor, VonNeumannStencil) {
    const double h = 0.3;
    const std::vector<Vec2> bonds{{h, 0}, {-h, 0}, {0, h}, {0, -h}};
    const std::vector<double> w(4, h * h);
    const ShapeTensor st = shape_tensor(bonds, w);
    ASSERT_FALSE(st.degenerate);
    const double k = 2 * std::pow(h, 4);
    EXPECT_NEAR(st.K(0, 0), k, 1e-15);
    EXPECT_NEAR(st.K(1, 1), k, 1e-15);
    EXPECT_NEAR(st.K(0, 1), 0.0, 1e-18);
}

TEST(ShapeTensor, TwoPointLatticeIsFlagged) {
    const PointSet pts = build_grid(Rectangle{0, 0, 2, 1}, 1.0);
    const Family fam = build_families(pts, 1.0);
    EXPECT_EQ(fam.degenerate_points().size(), 2u);
    std::ostringstream os;
    write_report(os, make_report(pts, fam));
    EXPECT_NE(os.str().find("degenerate 2"), std::string::npos);
}

TEST(Influence, Profiles) {
    EXPECT_DOUBLE_EQ(influence(InfluenceKind::Constant, 0.7, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(influence(InfluenceKind::CubicSpline, 0.0, 1.0), 1.0);
    EXPECT_NEAR(influence(InfluenceKind::CubicSpline, 1.0, 1.0), 0.0, 1e-15);
    // Continuity of the spline at the knot.
    EXPECT_NEAR(influence(InfluenceKind::CubicSpline, 0.5 - 1e-9, 1.0),
                influence(InfluenceKind::CubicSpline, 0.5 + 1e-9, 1.0), 1e-7);
}
