#pragma once

#include "ppm/lattice.hpp"
#include "ppm/tensor.hpp"

#include <span>
#include <vector>

namespace ppm {

/// Per-bond displacement, deformation and velocity states, laid out like
/// Family::bonds.
struct StateVectors {
    std::vector<Vec2> U;
    std::vector<Vec2> Y;
    std::vector<Vec2> Udot;
};

/// Nonlocal kinematic quantities of one material point.
struct KinematicState {
    Mat3 F = Mat3::Identity();
    Mat3 Fdot = Mat3::Zero();
    Mat3 L = Mat3::Zero();
    Mat3 d = Mat3::Zero();
    Mat3 R = Mat3::Identity();
    Mat3 V = Mat3::Identity();
    Mat3 b = Mat3::Identity();
    Mat3 be = Mat3::Identity();
    double J = 1.0;
};

StateVectors deformation_states(const Family& family, std::span<const Vec2> displacements,
                                std::span<const Vec2> velocities);

/// (sum_b w_b a_b (x) xi_b) K^-1 for an arbitrary per-bond vector state `a`.
Mat2 reduce_state(const Family& family, std::size_t point, std::span<const Vec2> bond_state);

/// Same reduction with the state formed on the fly as field[j] - field[i].
Mat2 reduce_field(const Family& family, std::size_t point, std::span<const Vec2> field);

/// F = (sum omega Y (x) xi V) K^-1, embedded in 3x3 with F33 = 1.
/// Throws NumericalError when det F <= 0.
std::vector<Mat3> nonlocal_F(const StateVectors& states, const Family& family);

/// Fdot = (sum omega Udot (x) xi V) K^-1.
std::vector<Mat3> nonlocal_Fdot(const StateVectors& states, const Family& family);

/// L = Fdot F^-1.
Mat3 velocity_gradient(const Mat3& Fdot, const Mat3& F);

/// d = sym(L).
Mat3 rate_of_deformation(const Mat3& L);

struct PolarDecomposition {
    Mat3 R = Mat3::Identity();
    Mat3 V = Mat3::Identity();
};

/// Left polar decomposition F = V R with V = sqrt(F F^T) and R = V^-1 F.
/// The in-plane block is handled in closed form; F33 is a pure stretch.
PolarDecomposition polar_rotation(const Mat3& F);

/// Elastic predictor be_trial = f be_n f^T.
Mat3 trial_elastic_be(const Mat3& be_n, const Mat3& f_rel);

}  // namespace ppm
