#include "ppm/error.hpp"
#include "ppm/kinematics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ppm;

namespace {

struct Lattice {
    PointSet points;
    Family family;
};

Lattice make_lattice(double dx = 0.5, int cells = 12) {
    Lattice l;
    l.points = build_grid(Rectangle{0, 0, cells * dx, cells * dx}, dx);
    l.family = build_families(l.points, 3 * dx);
    return l;
}

std::vector<Vec2> affine_displacement(const PointSet& pts, const Mat2& A, const Vec2& c) {
    std::vector<Vec2> u(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) u[i] = (A - Mat2::Identity()) * pts.positions[i] + c;
    return u;
}

std::vector<Vec2> zeros(std::size_t n) { return std::vector<Vec2>(n, Vec2::Zero()); }

Mat3 rot3(double angle) { return embed(rotation2(angle), 1.0); }

}  // namespace

TEST(DeformationStates, UndeformedAndTranslated) {
    const auto l = make_lattice();
    const std::size_t n = l.points.size();
    const auto s0 = deformation_states(l.family, zeros(n), zeros(n));
    std::vector<Vec2> t(n, Vec2(3.0, -1.5));
    const auto s1 = deformation_states(l.family, t, t);
    for (std::size_t b = 0; b < l.family.bond_count(); ++b) {
        EXPECT_EQ(s0.Y[b], l.family.bonds[b]);
        EXPECT_EQ(s0.U[b], Vec2::Zero());
        EXPECT_EQ(s1.U[b], Vec2::Zero());
        EXPECT_EQ(s1.Udot[b], Vec2::Zero());
        EXPECT_EQ(s1.Y[b], l.family.bonds[b]);
    }
}

TEST(DeformationStates, AffineField) {
    const auto l = make_lattice();
    Mat2 A;
    A << 1.2, 0.3, -0.1, 0.8;
    const auto u = affine_displacement(l.points, A, Vec2(0.4, 0.2));
    const auto s = deformation_states(l.family, u, zeros(u.size()));
    for (std::size_t b = 0; b < l.family.bond_count(); ++b) {
        EXPECT_LT((s.Y[b] - A * l.family.bonds[b]).norm(), 1e-13);
        EXPECT_LT((s.Y[b] - (l.family.bonds[b] + s.U[b])).norm(), 1e-15);
    }
}

TEST(NonlocalF, IdentityAndStretch) {
    const auto l = make_lattice();
    const std::size_t n = l.points.size();
    for (const auto& F : nonlocal_F(deformation_states(l.family, zeros(n), zeros(n)), l.family))
        EXPECT_LT((F - Mat3::Identity()).norm(), 1e-14);
    Mat2 A = Vec2(1.1, 0.9).asDiagonal();
    const auto u = affine_displacement(l.points, A, Vec2::Zero());
    const Mat3 expected = Vec3(1.1, 0.9, 1.0).asDiagonal();
    for (const auto& F : nonlocal_F(deformation_states(l.family, u, zeros(n)), l.family)) {
        EXPECT_LT((F - expected).norm(), 1e-12);
        EXPECT_EQ(F(0, 2), 0.0);
        EXPECT_EQ(F(2, 2), 1.0);
    }
}

TEST(NonlocalF, RigidRotationEverywhere) {
    const auto l = make_lattice();
    const double a = std::numbers::pi / 6.0;
    Mat2 Q;
    Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const auto u = affine_displacement(l.points, Q, Vec2(1.0, 2.0));
    const auto F = nonlocal_F(deformation_states(l.family, u, zeros(u.size())), l.family);
    // Boundary points included: the reconstruction is exact for any affine map.
    for (const auto& f : F) {
        EXPECT_NEAR(f(0, 0), std::sqrt(3.0) / 2.0, 1e-12);
        EXPECT_NEAR(f(0, 1), -0.5, 1e-12);
        EXPECT_NEAR(f(1, 0), 0.5, 1e-12);
        EXPECT_NEAR(f(1, 1), std::sqrt(3.0) / 2.0, 1e-12);
        EXPECT_NEAR(f.determinant(), 1.0, 1e-12);
    }
}

TEST(NonlocalF, RandomAffineMaps) {
    const auto l = make_lattice(0.75, 10);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-0.4, 0.4);
    for (int trial = 0; trial < 10; ++trial) {
        Mat2 A;
        A << 1 + dist(rng), dist(rng), dist(rng), 1 + dist(rng);
        if (A.determinant() < 0.2) continue;
        const auto u = affine_displacement(l.points, A, Vec2(dist(rng), dist(rng)));
        for (const auto& f : nonlocal_F(deformation_states(l.family, u, zeros(u.size())), l.family))
            EXPECT_LT((in_plane(f) - A).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(NonlocalF, InvertedPointIsReported) {
    const auto l = make_lattice();
    const Mat2 A = Vec2(-1.0, 1.0).asDiagonal();
    const auto u = affine_displacement(l.points, A, Vec2::Zero());
    try {
        nonlocal_F(deformation_states(l.family, u, zeros(u.size())), l.family);
        FAIL() << "expected a numerical error";
    } catch (const NumericalError& e) {
        EXPECT_NE(e.point(), NumericalError::kNoPoint);
    }
}

TEST(NonlocalFdot, ZeroAffineAndSpin) {
    const auto l = make_lattice();
    const std::size_t n = l.points.size();
    const auto u = zeros(n);
    for (const auto& Fd : nonlocal_Fdot(deformation_states(l.family, u, zeros(n)), l.family))
        EXPECT_EQ(Fd, Mat3::Zero());

    Mat2 B;
    B << 0.2, -0.7, 0.05, -0.3;
    std::vector<Vec2> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = B * l.points.positions[i];
    for (const auto& Fd : nonlocal_Fdot(deformation_states(l.family, u, v), l.family))
        EXPECT_LT((in_plane(Fd) - B).norm(), 1e-12);

    Mat2 W;
    W << 0.0, -0.8, 0.8, 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = W * l.points.positions[i];
    const auto states = deformation_states(l.family, u, v);
    const auto F = nonlocal_F(states, l.family);
    const auto Fd = nonlocal_Fdot(states, l.family);
    for (std::size_t i = 0; i < n; ++i) {
        const Mat3 L = velocity_gradient(Fd[i], F[i]);
        EXPECT_LT((L - embed(W, 0.0)).norm(), 1e-10);
        EXPECT_LT(rate_of_deformation(L).norm(), 1e-10);
    }
}

TEST(VelocityGradient, AlgebraicCases) {
    Mat3 F;
    F << 1.3, 0.2, 0, -0.1, 0.9, 0, 0, 0, 1;
    const Mat3 L = velocity_gradient(0.25 * F, F);
    EXPECT_LT((L - 0.25 * Mat3::Identity()).norm(), 1e-14);
    EXPECT_LT((rate_of_deformation(L) - 0.25 * Mat3::Identity()).norm(), 1e-14);

    Mat3 spin = Mat3::Zero();
    spin(0, 1) = 0.4;
    spin(1, 0) = -0.4;
    EXPECT_EQ(rate_of_deformation(spin), Mat3::Zero());

    Mat3 shear = Mat3::Zero();
    shear(0, 1) = 0.6;
    const Mat3 d = rate_of_deformation(velocity_gradient(shear, Mat3::Identity()));
    EXPECT_DOUBLE_EQ(d(0, 1), 0.3);
    EXPECT_DOUBLE_EQ(d(1, 0), 0.3);
    EXPECT_DOUBLE_EQ(d(0, 0), 0.0);
}

TEST(PolarRotation, ClosedFormCases) {
    auto check = [](const Mat3& F, const Mat3& R_expected, const Mat3& V_expected) {
        const auto pd = polar_rotation(F);
        EXPECT_LT((pd.R - R_expected).norm(), 1e-14);
        EXPECT_LT((pd.V - V_expected).norm(), 1e-14);
    };
    check(Mat3::Identity(), Mat3::Identity(), Mat3::Identity());
    check(rot3(0.7), rot3(0.7), Mat3::Identity());
    const Mat3 D = Vec3(2.0, 0.5, 1.0).asDiagonal();
    check(D, Mat3::Identity(), D);
}

TEST(PolarRotation, RandomProperties) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-0.6, 0.6);
    for (int k = 0; k < 200; ++k) {
        Mat2 A;
        A << 1 + dist(rng), dist(rng), dist(rng), 1 + dist(rng);
        if (A.determinant() <= 0.05) continue;
        const Mat3 F = embed(A, 1.0 + 0.2 * dist(rng));
        const auto pd = polar_rotation(F);
        EXPECT_LT((pd.R.transpose() * pd.R - Mat3::Identity()).norm(), 1e-10);
        EXPECT_NEAR(pd.R.determinant(), 1.0, 1e-12);
        EXPECT_LT((pd.V - pd.V.transpose()).norm(), 1e-14);
        EXPECT_TRUE(is_spd(pd.V));
        EXPECT_LT((pd.V * pd.R - F).norm(), 1e-12 * F.norm());
        // Independent oracle: V^2 = F F^T.
        EXPECT_LT((pd.V * pd.V - F * F.transpose()).norm(), 1e-12 * F.squaredNorm());
    }
}

TEST(PolarRotation, RejectsInversion) {
    EXPECT_THROW(polar_rotation(Vec3(-1.0, 1.0, 1.0).asDiagonal().toDenseMatrix()), NumericalError);
}

TEST(TrialElasticBe, Cases) {
    Mat3 be;
    be << 1.1, 0.05, 0, 0.05, 0.95, 0, 0, 0, 1.02;
    EXPECT_EQ(trial_elastic_be(be, Mat3::Identity()), be);
    EXPECT_LT((trial_elastic_be(Mat3::Identity(), rot3(1.1)) - Mat3::Identity()).norm(), 1e-15);
    const double eps = 0.03;
    const Mat3 f = Vec3(1 + eps, 1, 1).asDiagonal();
    const Mat3 expected = Vec3((1 + eps) * (1 + eps), 1, 1).asDiagonal();
    EXPECT_LT((trial_elastic_be(Mat3::Identity(), f) - expected).norm(), 1e-15);
    // det be tracks (det f)^2 det be_n in an elastic step.
    Mat3 g;
    g << 1.05, 0.1, 0, -0.02, 0.97, 0, 0, 0, 1;
    const Mat3 bt = trial_elastic_be(be, g);
    EXPECT_TRUE(is_spd(bt));
    EXPECT_NEAR(bt.determinant(), g.determinant() * g.determinant() * be.determinant(), 1e-14);
}

TEST(Kinematics, RotatedMotionConjugatesRateOfDeformation) {
    const auto l = make_lattice();
    const std::size_t n = l.points.size();
    Mat2 B;
    B << 0.3, 0.1, -0.2, -0.05;
    const Mat2 Q = rotation2(0.45);
    std::vector<Vec2> u = zeros(n), v(n), uq(n), vq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& x = l.points.positions[i];
        v[i] = B * x;
        // Rotated motion y = Q x with velocity Q B x at t = 0.
        uq[i] = Q * x - x;
        vq[i] = Q * B * x;
    }
    const auto s = deformation_states(l.family, u, v);
    const auto sq = deformation_states(l.family, uq, vq);
    const auto F = nonlocal_F(s, l.family);
    const auto Fd = nonlocal_Fdot(s, l.family);
    const auto Fq = nonlocal_F(sq, l.family);
    const auto Fdq = nonlocal_Fdot(sq, l.family);
    const Mat3 Q3 = embed(Q, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LT((Fq[i] - Q3 * F[i]).norm(), 1e-12);
        const Mat3 d = rate_of_deformation(velocity_gradient(Fd[i], F[i]));
        const Mat3 dq = rate_of_deformation(velocity_gradient(Fdq[i], Fq[i]));
        EXPECT_LT((dq - Q3 * d * Q3.transpose()).norm(), 1e-12);
    }
}

TEST(Kinematics, DeterminantContinuityOnSmoothMotion) {
    const auto l = make_lattice();
    const std::size_t n = l.points.size();
    Mat2 B;
    B << 0.4, 0.25, -0.3, -0.2;
    const double dt = 1e-3;
    // y(t) = exp(t B) x approximated by a smooth polynomial path.
    auto path = [&](double t) {
        const Mat2 M = Mat2::Identity() + t * B + 0.5 * t * t * B * B;
        std::vector<Vec2> u(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = (M - Mat2::Identity()) * l.points.positions[i];
            v[i] = (B + t * B * B) * l.points.positions[i];
        }
        return deformation_states(l.family, u, v);
    };
    for (int k = 0; k < 50; ++k) {
        const double t = k * dt;
        const auto s0 = path(t);
        const auto s1 = path(t + dt);
        const auto F0 = nonlocal_F(s0, l.family);
        const auto F1 = nonlocal_F(s1, l.family);
        const auto Fd0 = nonlocal_Fdot(s0, l.family);
        for (std::size_t i = 0; i < n; i += 17) {
            const double J0 = F0[i].determinant();
            const double L = velocity_gradient(Fd0[i], F0[i]).norm();
            EXPECT_LE(std::abs(F1[i].determinant() - J0), L * dt * J0 * (1 + 1e-2));
        }
    }
}
