#pragma once

#include "ppm/tensor.hpp"

namespace ppm {

struct ElasticModuli {
    double bulk = 0.0;   // K
    double shear = 0.0;  // G

    double lambda() const { return bulk - 2.0 * shear / 3.0; }
    double young() const { return 9.0 * bulk * shear / (3.0 * bulk + shear); }
    double poisson() const { return (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear)); }
    double p_wave() const { return bulk + 4.0 * shear / 3.0; }

    static ElasticModuli from_bulk_shear(double K, double G);
    static ElasticModuli from_young_poisson(double E, double nu);
};

/// How the Drucker-Prager cone is matched to the Mohr-Coulomb angles.
enum class ConeFit {
    Compression,  // outer cone through the triaxial compression meridian
    PlaneStrain,  // plane-strain (Tresca-limit) match
};

/// Yield F = q + a1 p - a2 c, potential G = q + a3 p - a4 c.
struct ConeCoefficients {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
    double a4 = 0.0;
};

ConeCoefficients alpha_coefficients(double friction_deg, double dilatancy_deg, ConeFit fit = ConeFit::Compression);

struct DruckerPragerParams {
    double c0 = 0.0;
    double c_residual = 0.0;
    double h = 0.0;  // hardening modulus, negative for softening
    double friction_deg = 0.0;
    double dilatancy_deg = 0.0;
    ConeFit fit = ConeFit::Compression;

    ConeCoefficients alphas() const { return alpha_coefficients(friction_deg, dilatancy_deg, fit); }
    /// Throws ConfigError when the parameter set violates its invariants.
    void validate() const;
};

/// Mean stress, deviator and q = sqrt(3/2)|s| of a Kirchhoff stress
/// (tension positive).
struct StressInvariants {
    double p = 0.0;
    double q = 0.0;
    Mat3 s = Mat3::Zero();
};

StressInvariants invariants(const Mat3& tau);

double yield_value(const Mat3& tau_corot, double c, const ConeCoefficients& a);
inline double yield_value(double p, double q, double c, const ConeCoefficients& a) { return q + a.a1 * p - a.a2 * c; }

/// c = max(c0 + h zeta, c_residual) for softening; plain linear law otherwise.
double harden(double zeta, const DruckerPragerParams& params);

/// dG/dtau = sqrt(3/2) s/|s| + (a3/3) 1.  Zero deviator yields the volumetric part only.
Mat3 flow_direction(const Mat3& tau, const ConeCoefficients& a);

/// Hencky hyperelasticity: tau = lambda tr(eps) 1 + 2 G eps, eps = ln(be)/2.
Mat3 kirchhoff_from_be(const Mat3& be, const ElasticModuli& moduli);
/// Inverse of kirchhoff_from_be.
Mat3 be_from_kirchhoff(const Mat3& tau, const ElasticModuli& moduli);

inline double yield_tolerance(const ElasticModuli& m) { return 1e-8 * (m.shear + m.bulk); }

struct ReturnOptions {
    bool plastic = true;  // false freezes the material in its elastic branch
};

struct ReturnResult {
    Mat3 tau = Mat3::Zero();          // Kirchhoff stress (spatial)
    Mat3 be = Mat3::Identity();       // updated elastic left Cauchy-Green tensor
    Mat3 flow = Mat3::Zero();         // plastic strain increment per unit dgamma
    double zeta = 0.0;
    double cohesion = 0.0;
    double dgamma = 0.0;
    double trial_yield = 0.0;
    bool plastic = false;
    bool apex = false;
};

/// Exponential-map return in principal logarithmic elastic strains.
/// Non-associated Drucker-Prager with linear cohesion law floored at c_residual.
ReturnResult return_map(const Mat3& be_trial, double zeta_n, const ElasticModuli& moduli,
                        const DruckerPragerParams& params, const ReturnOptions& options = {});

struct CorotatedStress {
    Mat3 tau_corot = Mat3::Zero();
    Mat3 piola = Mat3::Zero();
};

/// tau_corot = R^T tau R and first Piola stress P = tau F^-T.
CorotatedStress corotate_and_piola(const Mat3& tau, const Mat3& R, const Mat3& F);

}  // namespace ppm
