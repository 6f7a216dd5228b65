#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace ppm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Plane-strain embedding: in-plane block plus an out-of-plane diagonal entry.
inline Mat3 embed(const Mat2& a, double a33) {
    Mat3 m = Mat3::Zero();
    m.topLeftCorner<2, 2>() = a;
    m(2, 2) = a33;
    return m;
}

inline Mat2 in_plane(const Mat3& m) { return m.topLeftCorner<2, 2>(); }

inline Mat2 sym(const Mat2& a) { return 0.5 * (a + a.transpose()); }
inline Mat3 sym(const Mat3& a) { return 0.5 * (a + a.transpose()); }

inline double ddot(const Mat3& a, const Mat3& b) { return (a.array() * b.array()).sum(); }
inline double ddot(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

/// Eigenpairs of a symmetric 3x3 tensor. Columns of `vectors` are orthonormal.
struct Spectral3 {
    Vec3 values;
    Mat3 vectors;
};

/// Closed-form eigensolve for a symmetric 2x2 block.
inline void sym_eigen2(const Mat2& a, Vec2& values, Mat2& vectors) {
    const double mean = 0.5 * (a(0, 0) + a(1, 1));
    const double half_diff = 0.5 * (a(0, 0) - a(1, 1));
    const double off = 0.5 * (a(0, 1) + a(1, 0));
    const double radius = std::hypot(half_diff, off);
    values << mean + radius, mean - radius;
    const double theta = 0.5 * std::atan2(off, half_diff);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    vectors << c, -s, s, c;
}

/// Spectral decomposition of a symmetric 3x3 tensor. Plane-strain block
/// structure (zero 13/23 couplings) takes the closed-form path.
inline Spectral3 sym_eigen3(const Mat3& a) {
    Spectral3 out;
    const double coupling = std::abs(a(0, 2)) + std::abs(a(1, 2)) + std::abs(a(2, 0)) + std::abs(a(2, 1));
    if (coupling == 0.0) {
        Vec2 v2;
        Mat2 e2;
        sym_eigen2(a.topLeftCorner<2, 2>(), v2, e2);
        out.values << v2(0), v2(1), a(2, 2);
        out.vectors = Mat3::Zero();
        out.vectors.topLeftCorner<2, 2>() = e2;
        out.vectors(2, 2) = 1.0;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Mat3> solver(sym(a));
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    return out;
}

inline Mat3 compose(const Spectral3& s, const Vec3& values) {
    return s.vectors * values.asDiagonal() * s.vectors.transpose();
}

/// Isotropic tensor function f applied through the spectral decomposition.
template <class Fn>
Mat3 map_spectral(const Mat3& a, Fn&& fn) {
    const Spectral3 s = sym_eigen3(a);
    Vec3 v;
    for (int k = 0; k < 3; ++k) v(k) = fn(s.values(k));
    return compose(s, v);
}

inline Mat3 log_spd(const Mat3& a) {
    return map_spectral(a, [](double x) { return std::log(x); });
}

inline Mat3 exp_sym(const Mat3& a) {
    return map_spectral(a, [](double x) { return std::exp(x); });
}

/// Square root of a symmetric positive definite 2x2 tensor:
/// sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)).
inline Mat2 sqrt_spd2(const Mat2& m) {
    const double s = std::sqrt(m.determinant());
    const double t = std::sqrt(m.trace() + 2.0 * s);
    return (m + s * Mat2::Identity()) / t;
}

inline Mat2 rotation2(double angle) {
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

inline bool is_spd(const Mat3& a) {
    Eigen::LLT<Mat3> llt(sym(a));
    return llt.info() == Eigen::Success;
}

}  // namespace ppm
