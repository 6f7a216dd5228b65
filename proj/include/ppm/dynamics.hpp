#pragma once

#include "ppm/kinematics.hpp"
#include "ppm/lattice.hpp"
#include "ppm/plasticity.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ppm {

/// Piecewise-linear scalar schedule; constant beyond its end points.
class Schedule {
public:
    Schedule() = default;
    explicit Schedule(double constant) : points_{{0.0, constant}} {}
    explicit Schedule(std::vector<std::pair<double, double>> points);

    double value(double t) const;
    /// Slope of the active segment (right derivative).
    double rate(double t) const;
    const std::vector<std::pair<double, double>>& points() const { return points_; }

    static Schedule ramp(double rate, double duration);

private:
    std::vector<std::pair<double, double>> points_;
};

/// Picks material points by reference geometry.
struct Selector {
    enum class Kind { All, Face, Box, Eroded };
    Kind kind = Kind::All;
    std::uint8_t face = kFaceNone;  // for Kind::Face, one of the Face bits
    int layers = 1;                  // strip thickness in lattice cells
    Rectangle box;                   // for Kind::Box
};

std::vector<std::size_t> select(const PointSet& points, const Selector& selector);

enum class BcKind { PrescribedDisplacement, ConstantTraction, Fixed, RetainingForce };

struct BoundaryCondition {
    BcKind kind = BcKind::Fixed;
    Selector selector;
    int component = -1;               // 0 = x, 1 = y, -1 = both (fixed only)
    Schedule schedule;                // displacement (m) or pressure (Pa)
    std::optional<double> release_time;  // contribution vanishes for t >= release_time
    std::string name;
};

struct FrictionalBaseConfig {
    double level = 0.0;          // y of the rigid base plane
    double mu = 0.0;             // Coulomb friction factor
    double penalty = 0.0;        // k_pen (Pa/m); 0 selects 10 K / dx
    double stick_velocity = 1e-6;  // m/s
};

struct NewmarkConfig {
    double dt = 1e-4;
    double gamma = 0.5;
    double beta = 0.0;
    double end_time = 0.0;
};

enum class InitialStressKind { None, Uniform, Geostatic };

struct InitialStress {
    InitialStressKind kind = InitialStressKind::None;
    Mat3 uniform = Mat3::Zero();  // Cauchy stress for Kind::Uniform (tension positive)
    double k0 = 0.5;              // lateral earth pressure coefficient for Kind::Geostatic
};

struct RelaxationConfig {
    bool enabled = false;
    double damping = 0.8;           // local non-viscous damping coefficient
    double energy_ratio = 1e-6;     // converged when KE < ratio * peak KE
    long min_steps = 200;
    long max_steps = 200000;
    std::optional<double> dt;       // defaults to the integrator step
};

struct MaterialModel {
    ElasticModuli moduli;
    DruckerPragerParams plasticity;
    bool yield_enabled = true;
};

struct ModelSetup {
    PointSet points;
    Family family;
    MaterialModel material;
    Vec2 gravity = Vec2::Zero();
    double stabilization = 0.5;  // Gstab
    std::vector<BoundaryCondition> conditions;
    std::optional<FrictionalBaseConfig> base;
    NewmarkConfig integrator;
    InitialStress initial;
    RelaxationConfig relaxation;
    double damping = 0.0;  // local damping in the dynamic phase
};

/// Bond micromodulus of the 2-D plane-strain bond-based model with the same
/// Young's modulus: c = 48 E / (5 pi delta^3).
double micromodulus(const ElasticModuli& moduli, double horizon);

/// Critical time step estimate dx / c_p.
double critical_time_step(const ElasticModuli& moduli, double partial_density, double dx);

/// Internal force density L_i = sum_j (T_i<xi_ij> - T_j<xi_ji>) V_j with
/// T_i<xi> = omega P_i K_i^-1 xi.  `piola` holds the in-plane first Piola block.
std::vector<Vec2> force_state(const Family& family, std::span<const Mat2> piola);

/// Per-bond force states T_i<xi_b>, laid out like Family::bonds.
std::vector<Vec2> bond_force_states(const Family& family, std::span<const Mat2> piola);

/// Stabilization force density penalizing the non-affine part z = Y - F xi of
/// the deformation state: T_s = Gstab c omega z / |xi|.
std::vector<Vec2> stabilization_force(const Family& family, std::span<const Vec2> positions,
                                      std::span<const Mat2> F, double gstab, double micro);

/// Body-force density that transmits a uniform pressure through the exposed
/// faces in `face_mask` of the selected points (one-cell strip).
std::vector<Vec2> apply_traction(const PointSet& points, std::span<const std::size_t> selected, double pressure,
                                 std::uint8_t face_mask = 0xF);

/// Outward unit normal of a lattice face bit.
Vec2 face_normal(std::uint8_t face);

struct ContactForce {
    Vec2 force = Vec2::Zero();  // force per unit thickness (N/m)
    double normal = 0.0;
    bool sliding = false;
};

/// Penalty contact with a rigid base plus Coulomb friction.  `v_t` is the
/// predicted tangential velocity, `f_t_other` the remaining tangential force
/// on the point, `mass` its mass and `dt_half` the velocity update horizon.
ContactForce frictional_base(double y, double volume, double spacing, double v_t, double f_t_other, double mass,
                             double dt_half, const FrictionalBaseConfig& cfg, double penalty);

/// Geostatic Cauchy stress at a depth below the free surface.
Mat3 geostatic_stress(double partial_density, double gravity, double depth, double k0);

/// Explicit Newmark (beta = 0, gamma = 1/2) in velocity-Verlet form:
/// v_half = v + dt/2 a, u += dt v_half, then v = v_half + dt/2 a_new.
void newmark_predict(std::span<Vec2> u, std::span<Vec2> v_half, std::span<const Vec2> v, std::span<const Vec2> a,
                     double dt);
void newmark_correct(std::span<Vec2> v, std::span<const Vec2> v_half, std::span<const Vec2> a, double dt);

/// Throws NumericalError naming the first non-finite entry of `field`.
void ensure_finite(std::span<const Vec2> field, long step, const char* what);

struct StepReport {
    long step = 0;
    double time = 0.0;
    double kinetic_energy = 0.0;
    double max_eps_ps = 0.0;
};

/// Explicit (beta = 0, gamma = 1/2) Newmark integrator for the correspondence
/// model.  All per-point state lives in flat arrays.
class Simulation {
public:
    explicit Simulation(ModelSetup setup);

    /// Initial stress field plus damped relaxation with plasticity frozen.
    /// Returns the number of relaxation steps taken.
    long initialize();

    /// Advance one time step of the dynamic phase.
    void step();

    /// Advance until `end_time`; `observer` runs after every step.
    void run_until(double end_time, const std::function<void(const Simulation&)>& observer = {});

    const ModelSetup& setup() const { return setup_; }
    std::size_t size() const { return setup_.points.size(); }
    double time() const { return time_; }
    long step_index() const { return step_; }
    double dt() const { return setup_.integrator.dt; }

    std::span<const Vec2> displacement() const { return u_; }
    std::span<const Vec2> velocity() const { return v_; }
    std::span<const Vec2> acceleration() const { return a_; }
    std::span<const Vec2> initial_displacement() const { return u_init_; }
    std::span<const Vec2> internal_force() const { return internal_; }
    std::span<const Mat3> deformation_gradient() const { return F_; }
    std::span<const Mat3> elastic_left_cauchy_green() const { return be_; }
    std::span<const Mat3> kirchhoff() const { return tau_; }
    std::span<const Mat3> piola() const { return piola_; }
    std::span<const double> zeta() const { return zeta_; }
    std::span<const double> eps_ps() const { return eps_ps_; }
    std::span<const double> eps_pv() const { return eps_pv_; }
    std::span<const double> dgamma() const { return dgamma_; }

    std::vector<Vec2> current_positions() const;
    KinematicState kinematic_state(std::size_t i) const;

    double kinetic_energy() const;
    Vec2 momentum() const;
    /// Sum of internal force x volume over a point set (N per unit thickness).
    Vec2 resultant_internal_force(std::span<const std::size_t> points) const;

    bool plasticity_active() const { return plastic_; }
    void set_plasticity(bool on) { plastic_ = on; }
    void set_damping(double alpha) { damping_ = alpha; }

    /// Overwrite the dynamic state; used by checkpoint restart and tests.
    struct State {
        double time = 0.0;
        long step = 0;
        bool plastic = true;
        std::vector<Vec2> u, v, a, u_init;
        std::vector<Mat3> F, be, tau;
        std::vector<double> zeta, eps_ps, eps_pv, dgamma;
    };
    State state() const;
    void restore(const State& s);

    /// Prescribed-displacement point sets (index into setup().conditions).
    const std::vector<std::size_t>& selection(std::size_t condition) const { return selections_[condition]; }

    /// Diagnostic energy trace of the last relaxation (step, kinetic energy).
    const std::vector<std::pair<long, double>>& relaxation_trace() const { return relax_trace_; }

private:
    void apply_constraints(double t, bool hold, std::vector<Vec2>& u, std::vector<Vec2>& v) const;
    void update_stress(bool plastic);
    void assemble_forces(double t, std::span<const Vec2> v_half, double damping, double dt, bool initializing);
    void advance(double t_new, double dt, double damping, bool plastic, bool hold);
    void check_finite() const;
    std::vector<Mat3> initial_stress_field() const;

    ModelSetup setup_;
    ConeCoefficients cone_;
    double micro_ = 0.0;
    double penalty_ = 0.0;
    std::vector<std::vector<std::size_t>> selections_;
    std::vector<std::vector<Vec2>> traction_fields_;  // per traction/retaining condition
    std::vector<double> stab_coef_;                   // per bond

    double time_ = 0.0;
    long step_ = 0;
    bool plastic_ = true;
    double damping_ = 0.0;

    std::vector<double> mass_;
    std::vector<Vec2> u_, v_, a_, u_init_, y_, v_half_;
    std::vector<Vec2> internal_, external_;
    std::vector<Mat3> F_, be_, tau_, piola_;
    std::vector<Mat2> F2_, grad_, stress_map_;  // in-plane F, F - 1 and P K^-1 per point
    std::vector<double> zeta_, eps_ps_, eps_pv_, dgamma_;
    std::vector<std::uint8_t> constrained_;  // bit 0: x, bit 1: y
    std::vector<std::pair<long, double>> relax_trace_;
};

}  // namespace ppm
