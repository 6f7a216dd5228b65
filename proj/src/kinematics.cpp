#include "ppm/kinematics.hpp"

#include "ppm/error.hpp"

namespace ppm {

StateVectors deformation_states(const Family& family, std::span<const Vec2> displacements,
                                std::span<const Vec2> velocities) {
    const std::size_t n = family.size();
    if (displacements.size() != n || velocities.size() != n)
        throw ConfigError("displacement and velocity arrays must cover every point");
    StateVectors s;
    s.U.resize(family.bond_count());
    s.Y.resize(family.bond_count());
    s.Udot.resize(family.bond_count());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = family.begin(i); b < family.end(i); ++b) {
            const std::size_t j = family.neighbors[b];
            s.U[b] = displacements[j] - displacements[i];
            s.Y[b] = family.bonds[b] + s.U[b];
            s.Udot[b] = velocities[j] - velocities[i];
        }
    }
    return s;
}

Mat2 reduce_state(const Family& family, std::size_t point, std::span<const Vec2> bond_state) {
    Mat2 acc = Mat2::Zero();
    for (std::size_t b = family.begin(point); b < family.end(point); ++b)
        acc += family.weight[b] * bond_state[b] * family.bonds[b].transpose();
    return acc * family.shape_inv[point];
}

Mat2 reduce_field(const Family& family, std::size_t point, std::span<const Vec2> field) {
    Mat2 acc = Mat2::Zero();
    const Vec2& fi = field[point];
    for (std::size_t b = family.begin(point); b < family.end(point); ++b)
        acc += family.weight[b] * (field[family.neighbors[b]] - fi) * family.bonds[b].transpose();
    return acc * family.shape_inv[point];
}

std::vector<Mat3> nonlocal_F(const StateVectors& states, const Family& family) {
    std::vector<Mat3> F(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        F[i] = embed(reduce_state(family, i, states.Y), 1.0);
        if (!(F[i].determinant() > 0.0)) throw NumericalError("non-positive det F", i);
    }
    return F;
}

std::vector<Mat3> nonlocal_Fdot(const StateVectors& states, const Family& family) {
    std::vector<Mat3> Fdot(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) Fdot[i] = embed(reduce_state(family, i, states.Udot), 0.0);
    return Fdot;
}

Mat3 velocity_gradient(const Mat3& Fdot, const Mat3& F) {
    const double J = F.determinant();
    if (!(J > 0.0)) throw NumericalError("velocity gradient requires det F > 0");
    return Fdot * F.inverse();
}

Mat3 rate_of_deformation(const Mat3& L) { return sym(L); }

PolarDecomposition polar_rotation(const Mat3& F) {
    const Mat2 f = in_plane(F);
    const double J = f.determinant();
    if (!(J > 0.0) || !(F(2, 2) > 0.0)) throw NumericalError("polar decomposition requires det F > 0");
    const Mat2 v = sqrt_spd2(f * f.transpose());
    PolarDecomposition out;
    out.V = embed(v, F(2, 2));
    out.R = embed(v.inverse() * f, 1.0);
    return out;
}

Mat3 trial_elastic_be(const Mat3& be_n, const Mat3& f_rel) {
    if (!(f_rel.determinant() > 0.0)) throw NumericalError("relative deformation gradient is inverted");
    Mat3 be = f_rel * be_n * f_rel.transpose();
    be = sym(be);
    if (!is_spd(be)) throw NumericalError("trial elastic left Cauchy-Green tensor lost positive definiteness");
    return be;
}

}  // namespace ppm
