#include "ppm/plasticity.hpp"

#include "ppm/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace ppm {

ElasticModuli ElasticModuli::from_bulk_shear(double K, double G) {
    if (!(K > 0.0) || !(G > 0.0)) throw ConfigError(fmt::format("moduli must be positive (K = {}, G = {})", K, G));
    return {K, G};
}

ElasticModuli ElasticModuli::from_young_poisson(double E, double nu) {
    if (!(E > 0.0)) throw ConfigError(fmt::format("Young's modulus must be positive, got {}", E));
    if (!(nu > -1.0 && nu < 0.5)) throw ConfigError(fmt::format("Poisson's ratio must lie in (-1, 0.5), got {}", nu));
    return from_bulk_shear(E / (3.0 * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu)));
}

ConeCoefficients alpha_coefficients(double friction_deg, double dilatancy_deg, ConeFit fit) {
    const double phi = friction_deg * std::numbers::pi / 180.0;
    const double psi = dilatancy_deg * std::numbers::pi / 180.0;
    ConeCoefficients a;
    switch (fit) {
        case ConeFit::Compression: {
            const double sp = std::sin(phi);
            const double ss = std::sin(psi);
            a.a1 = 6.0 * sp / (3.0 - sp);
            a.a2 = 6.0 * std::cos(phi) / (3.0 - sp);
            a.a3 = 6.0 * ss / (3.0 - ss);
            a.a4 = 6.0 * std::cos(psi) / (3.0 - ss);
            break;
        }
        case ConeFit::PlaneStrain: {
            const double tp = std::tan(phi);
            const double ts = std::tan(psi);
            const double rp = std::sqrt(9.0 + 12.0 * tp * tp);
            const double rs = std::sqrt(9.0 + 12.0 * ts * ts);
            const double root3 = std::sqrt(3.0);
            a.a1 = 3.0 * root3 * tp / rp;
            a.a2 = 3.0 * root3 / rp;
            a.a3 = 3.0 * root3 * ts / rs;
            a.a4 = 3.0 * root3 / rs;
            break;
        }
    }
    return a;
}

void DruckerPragerParams::validate() const {
    if (!(c0 > 0.0)) throw ConfigError("initial cohesion must be positive");
    if (c_residual < 0.0 || c_residual > c0) throw ConfigError("residual cohesion must lie in [0, c0]");
    if (friction_deg < 0.0 || friction_deg > 50.0) throw ConfigError("friction angle must lie in [0, 50] degrees");
    if (dilatancy_deg < 0.0 || dilatancy_deg > friction_deg)
        throw ConfigError("dilatancy angle must lie in [0, friction angle]");
}

StressInvariants invariants(const Mat3& tau) {
    StressInvariants inv;
    inv.p = tau.trace() / 3.0;
    inv.s = tau - inv.p * Mat3::Identity();
    inv.q = std::sqrt(1.5) * inv.s.norm();
    return inv;
}

double yield_value(const Mat3& tau_corot, double c, const ConeCoefficients& a) {
    const StressInvariants inv = invariants(tau_corot);
    return yield_value(inv.p, inv.q, c, a);
}

double harden(double zeta, const DruckerPragerParams& params) {
    const double c = params.c0 + params.h * zeta;
    return params.h < 0.0 ? std::max(c, params.c_residual) : c;
}

Mat3 flow_direction(const Mat3& tau, const ConeCoefficients& a) {
    const StressInvariants inv = invariants(tau);
    Mat3 n = (a.a3 / 3.0) * Mat3::Identity();
    const double norm = inv.s.norm();
    if (norm > 0.0) n += std::sqrt(1.5) * inv.s / norm;
    return n;
}

namespace {

/// Principal Hencky state of an elastic left Cauchy-Green tensor.
struct PrincipalStrain {
    Spectral3 frame;
    Vec3 eps;
};

PrincipalStrain principal_strain(const Mat3& be) {
    PrincipalStrain ps;
    ps.frame = sym_eigen3(be);
    for (int k = 0; k < 3; ++k) {
        if (!(ps.frame.values(k) > 0.0)) throw NumericalError("elastic left Cauchy-Green tensor is not positive definite");
        ps.eps(k) = 0.5 * std::log(ps.frame.values(k));
    }
    return ps;
}

Vec3 principal_stress(const Vec3& eps, const ElasticModuli& m) {
    return Vec3::Constant(m.lambda() * eps.sum()) + 2.0 * m.shear * eps;
}

}  // namespace

Mat3 kirchhoff_from_be(const Mat3& be, const ElasticModuli& moduli) {
    const PrincipalStrain ps = principal_strain(be);
    return compose(ps.frame, principal_stress(ps.eps, moduli));
}

Mat3 be_from_kirchhoff(const Mat3& tau, const ElasticModuli& moduli) {
    const Spectral3 frame = sym_eigen3(tau);
    const double p = frame.values.sum() / 3.0;
    Vec3 b;
    for (int k = 0; k < 3; ++k) {
        const double eps = (frame.values(k) - p) / (2.0 * moduli.shear) + p / (3.0 * moduli.bulk);
        b(k) = std::exp(2.0 * eps);
    }
    return compose(frame, b);
}

ReturnResult return_map(const Mat3& be_trial, double zeta_n, const ElasticModuli& moduli,
                        const DruckerPragerParams& params, const ReturnOptions& options) {
    const double K = moduli.bulk;
    const double G = moduli.shear;
    const ConeCoefficients a = params.alphas();

    const PrincipalStrain ps = principal_strain(be_trial);
    const double ev = ps.eps.sum();
    const Vec3 e_dev = ps.eps - Vec3::Constant(ev / 3.0);
    const double p_tr = K * ev;
    const Vec3 s_tr = 2.0 * G * e_dev;
    const double q_tr = std::sqrt(1.5) * s_tr.norm();

    const double c_n = harden(zeta_n, params);
    ReturnResult out;
    out.zeta = zeta_n;
    out.cohesion = c_n;
    out.trial_yield = yield_value(p_tr, q_tr, c_n, a);

    if (!options.plastic || out.trial_yield <= yield_tolerance(moduli)) {
        out.tau = compose(ps.frame, Vec3::Constant(p_tr) + s_tr);
        out.be = be_trial;
        return out;
    }
    out.plastic = true;

    // Softening slope active at zeta_n (zero once the cohesion sits on its floor).
    const bool on_floor = params.h < 0.0 && c_n <= params.c_residual;
    const double h_eff = on_floor ? 0.0 : params.h;
    const auto crosses_floor = [&](double dg) {
        return params.h < 0.0 && !on_floor && params.c0 + params.h * (zeta_n + a.a4 * dg) < params.c_residual;
    };

    double p_new = 0.0;
    Vec3 s_new = Vec3::Zero();
    double dg = 0.0;

    const double denom = 3.0 * G + K * a.a1 * a.a3 + a.a2 * a.a4 * h_eff;
    if (!(denom > 0.0))
        throw NumericalError(fmt::format("ill-posed return mapping: softening modulus {} exceeds the elastic stiffness", params.h));
    dg = out.trial_yield / denom;
    if (crosses_floor(dg)) dg = yield_value(p_tr, q_tr, params.c_residual, a) / (3.0 * G + K * a.a1 * a.a3);

    if (q_tr - 3.0 * G * dg >= 0.0) {
        const double q_new = q_tr - 3.0 * G * dg;
        p_new = p_tr - K * a.a3 * dg;
        s_new = q_tr > 0.0 ? Vec3(s_tr * (q_new / q_tr)) : Vec3::Zero();
        const Vec3 n_dev = q_tr > 0.0 ? Vec3(std::sqrt(1.5) * s_tr / s_tr.norm()) : Vec3::Zero();
        out.flow = compose(ps.frame, n_dev + Vec3::Constant(a.a3 / 3.0));
    } else {
        // Return lands beyond the cone apex: project to the apex point.
        if (!(a.a1 > 0.0)) throw NumericalError("apex return requested for a pressure-insensitive cone");
        if (!(a.a3 > 0.0)) throw NumericalError("apex return undefined for zero dilatancy");
        out.apex = true;
        const double apex_denom = a.a1 * K * a.a3 + a.a2 * a.a4 * h_eff;
        if (!(apex_denom > 0.0)) throw NumericalError("ill-posed apex return");
        dg = (a.a1 * p_tr - a.a2 * c_n) / apex_denom;
        if (crosses_floor(dg)) dg = (a.a1 * p_tr - a.a2 * params.c_residual) / (a.a1 * K * a.a3);
        p_new = p_tr - K * a.a3 * dg;
        s_new = Vec3::Zero();
        const Vec3 plastic_strain = e_dev + Vec3::Constant((p_tr - p_new) / (3.0 * K));
        out.flow = dg > 0.0 ? compose(ps.frame, plastic_strain / dg) : Mat3::Zero();
    }

    out.dgamma = dg;
    out.zeta = zeta_n + a.a4 * dg;
    out.cohesion = harden(out.zeta, params);

    Vec3 b_new;
    for (int k = 0; k < 3; ++k) b_new(k) = std::exp(2.0 * (s_new(k) / (2.0 * G) + p_new / (3.0 * K)));
    out.be = compose(ps.frame, b_new);
    out.tau = compose(ps.frame, Vec3::Constant(p_new) + s_new);
    return out;
}

CorotatedStress corotate_and_piola(const Mat3& tau, const Mat3& R, const Mat3& F) {
    if (!(F.determinant() > 0.0)) throw NumericalError("Piola transform requires det F > 0");
    CorotatedStress out;
    out.tau_corot = R.transpose() * tau * R;
    out.piola = tau * F.inverse().transpose();
    return out;
}

}  // namespace ppm
