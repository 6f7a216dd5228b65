#include "ppm/dynamics.hpp"

#include "ppm/diagnostics.hpp"
#include "ppm/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>

namespace ppm {

// ---------------------------------------------------------------------------
// Schedule

Schedule::Schedule(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
    if (points_.empty()) throw ConfigError("schedule needs at least one point");
    for (std::size_t k = 1; k < points_.size(); ++k)
        if (!(points_[k].first > points_[k - 1].first)) throw ConfigError("schedule times must be strictly increasing");
}

double Schedule::value(double t) const {
    if (points_.empty()) return 0.0;
    if (t <= points_.front().first) return points_.front().second;
    if (t >= points_.back().first) return points_.back().second;
    const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                     [](double x, const auto& p) { return x < p.first; });
    const auto& [t1, v1] = *it;
    const auto& [t0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

double Schedule::rate(double t) const {
    if (points_.size() < 2 || t < points_.front().first || t >= points_.back().first) return 0.0;
    const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                     [](double x, const auto& p) { return x < p.first; });
    const auto& [t1, v1] = *it;
    const auto& [t0, v0] = *(it - 1);
    return (v1 - v0) / (t1 - t0);
}

Schedule Schedule::ramp(double rate, double duration) { return Schedule({{0.0, 0.0}, {duration, rate * duration}}); }

// ---------------------------------------------------------------------------
// Selection

std::vector<std::size_t> select(const PointSet& points, const Selector& selector) {
    std::vector<std::size_t> out;
    switch (selector.kind) {
        case Selector::Kind::All:
            out.resize(points.size());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
            break;
        case Selector::Kind::Box:
            for (std::size_t i = 0; i < points.size(); ++i) {
                const Vec2& x = points.positions[i];
                if (x.x() >= selector.box.x_min && x.x() <= selector.box.x_max && x.y() >= selector.box.y_min &&
                    x.y() <= selector.box.y_max)
                    out.push_back(i);
            }
            break;
        case Selector::Kind::Eroded:
            for (std::size_t i = 0; i < points.size(); ++i)
                if (points.excluded_faces[i] != kFaceNone) out.push_back(i);
            break;
        case Selector::Kind::Face: {
            std::map<std::array<int, 2>, std::size_t> occupied;
            for (std::size_t i = 0; i < points.size(); ++i) occupied.emplace(points.cells[i], i);
            const Vec2 n = face_normal(selector.face);
            const int di = static_cast<int>(n.x());
            const int dj = static_cast<int>(n.y());
            for (std::size_t i = 0; i < points.size(); ++i) {
                for (int k = 1; k <= std::max(1, selector.layers); ++k) {
                    const std::array<int, 2> c{points.cells[i][0] + k * di, points.cells[i][1] + k * dj};
                    if (!occupied.contains(c)) {
                        out.push_back(i);
                        break;
                    }
                }
            }
            break;
        }
    }
    return out;
}

Vec2 face_normal(std::uint8_t face) {
    switch (face) {
        case kFaceXMinus: return Vec2(-1.0, 0.0);
        case kFaceXPlus: return Vec2(1.0, 0.0);
        case kFaceYMinus: return Vec2(0.0, -1.0);
        case kFaceYPlus: return Vec2(0.0, 1.0);
        default: throw ConfigError(fmt::format("invalid face selector {}", face));
    }
}

namespace {
constexpr std::array<std::uint8_t, 4> kFaces{kFaceXMinus, kFaceXPlus, kFaceYMinus, kFaceYPlus};
}

// ---------------------------------------------------------------------------
// Force kernels

double micromodulus(const ElasticModuli& moduli, double horizon) {
    return 48.0 * moduli.young() / (5.0 * std::numbers::pi * horizon * horizon * horizon);
}

double critical_time_step(const ElasticModuli& moduli, double partial_density, double dx) {
    return dx / std::sqrt(moduli.p_wave() / partial_density);
}

std::vector<Vec2> bond_force_states(const Family& family, std::span<const Mat2> piola) {
    std::vector<Vec2> T(family.bond_count());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const Mat2 A = piola[i] * family.shape_inv[i];
        for (std::size_t b = family.begin(i); b < family.end(i); ++b) T[b] = family.omega[b] * (A * family.bonds[b]);
    }
    return T;
}

std::vector<Vec2> force_state(const Family& family, std::span<const Mat2> piola) {
    const std::size_t n = family.size();
    std::vector<Mat2> A(n);
    for (std::size_t i = 0; i < n; ++i) A[i] = piola[i] * family.shape_inv[i];
    std::vector<Vec2> L(n, Vec2::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 acc = Vec2::Zero();
        for (std::size_t b = family.begin(i); b < family.end(i); ++b)
            acc += family.weight[b] * ((A[i] + A[family.neighbors[b]]) * family.bonds[b]);
        L[i] = acc;
    }
    return L;
}

std::vector<Vec2> stabilization_force(const Family& family, std::span<const Vec2> positions, std::span<const Mat2> F,
                                      double gstab, double micro) {
    const std::size_t n = family.size();
    std::vector<Vec2> L(n, Vec2::Zero());
    if (gstab == 0.0) return L;
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 acc = Vec2::Zero();
        for (std::size_t b = family.begin(i); b < family.end(i); ++b) {
            const std::size_t j = family.neighbors[b];
            const Vec2& xi = family.bonds[b];
            const Vec2 Y = positions[j] - positions[i];
            // z_ij - z_ji with z_ij = Y - F_i xi and z_ji = -Y + F_j xi
            const Vec2 dz = 2.0 * Y - (F[i] + F[j]) * xi;
            acc += family.weight[b] * (gstab * micro / xi.norm()) * dz;
        }
        L[i] = acc;
    }
    return L;
}

std::vector<Vec2> apply_traction(const PointSet& points, std::span<const std::size_t> selected, double pressure,
                                 std::uint8_t face_mask) {
    if (selected.empty()) throw ConfigError("traction applied to an empty point selection");
    std::vector<Vec2> f(points.size(), Vec2::Zero());
    for (const auto i : selected) {
        for (const auto face : kFaces) {
            if (!(points.faces[i] & face & face_mask)) continue;
            // Face of width dx x 1 carrying -p n, spread over the cell volume.
            f[i] += -pressure * face_normal(face) * points.spacing / points.volumes[i];
        }
    }
    return f;
}

ContactForce frictional_base(double y, double volume, double spacing, double v_t, double f_t_other, double mass,
                             double dt_half, const FrictionalBaseConfig& cfg, double penalty) {
    ContactForce out;
    const double pen = cfg.level - y;
    if (!(pen > 0.0)) return out;
    out.normal = penalty * pen * volume / spacing;
    const double cap = cfg.mu * out.normal;
    // Tangential force that would bring the slip velocity to rest this step.
    const double f_stick = -(mass * v_t / dt_half + f_t_other);
    double f_t = 0.0;
    if (std::isinf(cfg.mu)) {
        f_t = f_stick;
    } else if (std::abs(v_t) <= cfg.stick_velocity) {
        f_t = std::clamp(f_stick, -cap, cap);
        out.sliding = std::abs(f_stick) > cap;
    } else {
        f_t = v_t > 0.0 ? -cap : cap;
        // Never reverse the slip within one step.
        if ((f_stick > 0.0) == (f_t > 0.0) && std::abs(f_stick) < std::abs(f_t)) f_t = f_stick;
        out.sliding = true;
    }
    out.force = Vec2(f_t, out.normal);
    return out;
}

Mat3 geostatic_stress(double partial_density, double gravity, double depth, double k0) {
    const double sv = -partial_density * gravity * std::max(depth, 0.0);
    Mat3 s = Mat3::Zero();
    s(0, 0) = k0 * sv;
    s(1, 1) = sv;
    s(2, 2) = k0 * sv;
    return s;
}

namespace {

// Runs fn(i) for every point, in parallel when available. The failure with the
// lowest point index is rethrown so errors do not depend on scheduling.
template <class Fn>
void for_each_point(std::size_t n, Fn&& fn) {
#ifdef PPM_HAVE_OPENMP
    std::exception_ptr error;
    std::size_t error_index = n;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto i = static_cast<std::size_t>(k);
        try {
            fn(i);
        } catch (...) {
#pragma omp critical(ppm_point_error)
            if (i < error_index) {
                error_index = i;
                error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
#else
    for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(ModelSetup setup) : setup_(std::move(setup)) {
    const auto& pts = setup_.points;
    const auto& fam = setup_.family;
    const std::size_t n = pts.size();
    if (fam.size() != n) throw ConfigError("family does not match the point set");
    const auto degenerate = fam.degenerate_points();
    if (!degenerate.empty()) {
        std::string list;
        for (std::size_t k = 0; k < std::min<std::size_t>(degenerate.size(), 8); ++k)
            list += (k ? ", " : "") + std::to_string(degenerate[k]);
        throw ConfigError(fmt::format("{} points have a singular shape tensor (first: {})", degenerate.size(), list));
    }
    const auto& ig = setup_.integrator;
    if (!(ig.dt > 0.0)) throw ConfigError("time step must be positive");
    if (ig.beta != 0.0 || ig.gamma != 0.5)
        throw ConfigError("only the explicit central-difference Newmark member (beta = 0, gamma = 1/2) is supported");
    setup_.material.plasticity.validate();

    cone_ = setup_.material.plasticity.alphas();
    micro_ = micromodulus(setup_.material.moduli, fam.horizon);
    penalty_ = setup_.base && setup_.base->penalty > 0.0 ? setup_.base->penalty
                                                          : 10.0 * setup_.material.moduli.bulk / pts.spacing;
    stab_coef_.resize(fam.bond_count());
    for (std::size_t b = 0; b < fam.bond_count(); ++b)
        stab_coef_[b] = setup_.stabilization * micro_ / fam.bonds[b].norm();

    mass_.resize(n);
    for (std::size_t i = 0; i < n; ++i) mass_[i] = pts.densities[i] * pts.volumes[i];

    constrained_.assign(n, 0);
    selections_.resize(setup_.conditions.size());
    traction_fields_.resize(setup_.conditions.size());
    for (std::size_t c = 0; c < setup_.conditions.size(); ++c) {
        const auto& bc = setup_.conditions[c];
        selections_[c] = select(pts, bc.selector);
        if (selections_[c].empty())
            throw ConfigError(fmt::format("boundary condition '{}' selects no points", bc.name));
        switch (bc.kind) {
            case BcKind::Fixed:
            case BcKind::PrescribedDisplacement: {
                const std::uint8_t mask = bc.component < 0 ? 3 : static_cast<std::uint8_t>(1u << bc.component);
                for (const auto i : selections_[c]) constrained_[i] |= mask;
                break;
            }
            case BcKind::ConstantTraction: {
                std::uint8_t mask = 0xF;
                if (bc.selector.kind == Selector::Kind::Face) mask = bc.selector.face;
                traction_fields_[c] = apply_traction(pts, selections_[c], 1.0, mask);
                break;
            }
            case BcKind::RetainingForce:
                traction_fields_[c].assign(n, Vec2::Zero());
                break;
        }
    }

    u_.assign(n, Vec2::Zero());
    v_.assign(n, Vec2::Zero());
    a_.assign(n, Vec2::Zero());
    u_init_.assign(n, Vec2::Zero());
    v_half_.assign(n, Vec2::Zero());
    y_ = pts.positions;
    internal_.assign(n, Vec2::Zero());
    external_.assign(n, Vec2::Zero());
    F_.assign(n, Mat3::Identity());
    be_.assign(n, Mat3::Identity());
    tau_.assign(n, Mat3::Zero());
    piola_.assign(n, Mat3::Zero());
    F2_.assign(n, Mat2::Identity());
    grad_.assign(n, Mat2::Zero());
    stress_map_.assign(n, Mat2::Zero());
    zeta_.assign(n, 0.0);
    eps_ps_.assign(n, 0.0);
    eps_pv_.assign(n, 0.0);
    dgamma_.assign(n, 0.0);
    plastic_ = setup_.material.yield_enabled;
    damping_ = setup_.damping;

    // Retaining forces carry the initial stress across the faces opened by the eroded region.
    bool retaining = false;
    for (const auto& bc : setup_.conditions) retaining |= bc.kind == BcKind::RetainingForce;
    if (retaining) {
        const std::vector<Mat3> sigma0 = initial_stress_field();
        for (std::size_t c = 0; c < setup_.conditions.size(); ++c) {
            if (setup_.conditions[c].kind != BcKind::RetainingForce) continue;
            auto& field = traction_fields_[c];
            for (const auto i : selections_[c]) {
                for (const auto face : kFaces) {
                    if (!(pts.excluded_faces[i] & face)) continue;
                    field[i] += in_plane(sigma0[i]) * face_normal(face) * pts.spacing / pts.volumes[i];
                }
            }
        }
    }
}

void Simulation::apply_constraints(double t, bool hold, std::vector<Vec2>& u, std::vector<Vec2>& v) const {
    for (std::size_t c = 0; c < setup_.conditions.size(); ++c) {
        const auto& bc = setup_.conditions[c];
        if (bc.kind == BcKind::Fixed) {
            for (const auto i : selections_[c]) {
                for (int k = 0; k < 2; ++k) {
                    if (bc.component >= 0 && bc.component != k) continue;
                    u[i](k) = u_init_[i](k);
                    v[i](k) = 0.0;
                }
            }
        } else if (bc.kind == BcKind::PrescribedDisplacement) {
            const double value = bc.schedule.value(t);
            const double rate = hold ? 0.0 : bc.schedule.rate(t);
            const int k = bc.component;
            for (const auto i : selections_[c]) {
                u[i](k) = u_init_[i](k) + value;
                v[i](k) = rate;
            }
        }
    }
}

void Simulation::update_stress(bool plastic) {
    const auto& fam = setup_.family;
    const auto& mat = setup_.material;
    const ReturnOptions opts{plastic};
    const std::size_t n = size();
    auto point = [&](std::size_t i) {
        // Displacement differences avoid the cancellation of y_j - y_i.
        const Mat2 H = reduce_field(fam, i, u_);
        const Mat2 F2 = Mat2::Identity() + H;
        const double J = F2.determinant();
        if (!(J > 0.0)) throw NumericalError(fmt::format("non-positive det F ({:.3e})", J), i, step_);
        const Mat3 F = embed(F2, 1.0);
        const Mat3 f_rel = embed(F2 * F2_[i].inverse(), 1.0);
        ReturnResult ret;
        try {
            const Mat3 be_trial = trial_elastic_be(be_[i], f_rel);
            ret = return_map(be_trial, zeta_[i], mat.moduli, mat.plasticity, opts);
        } catch (const NumericalError& e) {
            throw NumericalError(e.what(), i, step_);
        }
        F_[i] = F;
        F2_[i] = F2;
        grad_[i] = H;
        be_[i] = ret.be;
        tau_[i] = ret.tau;
        zeta_[i] = ret.zeta;
        dgamma_[i] = ret.dgamma;
        if (ret.plastic) {
            const PlasticIncrement inc = accumulate_plastic_strains(ret.dgamma, ret.flow);
            eps_ps_[i] += inc.eps_ps;
            eps_pv_[i] += inc.eps_pv;
        }
        const Mat2 inv = F2.inverse();
        piola_[i] = tau_[i] * embed(inv.transpose(), 1.0);
        stress_map_[i] = in_plane(piola_[i]) * fam.shape_inv[i];
    };
    for_each_point(n, point);
}

void Simulation::assemble_forces(double t, std::span<const Vec2> v_half, double damping, double dt, bool initializing) {
    const auto& fam = setup_.family;
    const auto& pts = setup_.points;
    const std::size_t n = size();
    const bool stabilized = setup_.stabilization != 0.0;

    for_each_point(n, [&](std::size_t i) {
        Vec2 acc = Vec2::Zero();
        const Mat2& Ai = stress_map_[i];
        const Mat2& Hi = grad_[i];
        const Vec2& ui = u_[i];
        for (std::size_t b = fam.begin(i); b < fam.end(i); ++b) {
            const std::size_t j = fam.neighbors[b];
            const Vec2& xi = fam.bonds[b];
            Vec2 f = (Ai + stress_map_[j]) * xi;
            if (stabilized) f += stab_coef_[b] * (2.0 * (u_[j] - ui) - (Hi + grad_[j]) * xi);
            acc += fam.weight[b] * f;
        }
        internal_[i] = acc;
    });

    for (std::size_t i = 0; i < n; ++i) external_[i] = pts.densities[i] * setup_.gravity;
    for (std::size_t c = 0; c < setup_.conditions.size(); ++c) {
        const auto& bc = setup_.conditions[c];
        if (bc.kind != BcKind::ConstantTraction && bc.kind != BcKind::RetainingForce) continue;
        if (!initializing && bc.release_time && t >= *bc.release_time) continue;
        const double scale = bc.kind == BcKind::ConstantTraction ? bc.schedule.value(t) : 1.0;
        if (scale == 0.0) continue;
        for (const auto i : selections_[c]) external_[i] += scale * traction_fields_[c][i];
    }

    // The in-situ state is built with the base in full stick.
    std::optional<FrictionalBaseConfig> base = setup_.base;
    if (base && initializing) base->mu = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 f = internal_[i] + external_[i];
        const double pen_force = base ? penalty_ * std::max(base->level - y_[i].y(), 0.0) / pts.spacing : 0.0;
        f.y() += pen_force;
        // Local damping acts on the out-of-balance force including the contact normal.
        if (damping > 0.0) {
            for (int k = 0; k < 2; ++k) {
                const double s = v_half[i](k) > 0.0 ? 1.0 : (v_half[i](k) < 0.0 ? -1.0 : 0.0);
                f(k) -= damping * std::abs(f(k)) * s;
            }
        }
        // Friction last: the stick force balances everything else acting on the point.
        if (base) {
            const ContactForce cf = frictional_base(y_[i].y(), pts.volumes[i], pts.spacing, v_half[i].x(),
                                                    f.x() * pts.volumes[i], mass_[i], 0.5 * dt, *base, penalty_);
            f.x() += cf.force.x() / pts.volumes[i];
        }
        a_[i] = f / pts.densities[i];
        if (constrained_[i] & 1) a_[i].x() = 0.0;
        if (constrained_[i] & 2) a_[i].y() = 0.0;
    }
}

void newmark_predict(std::span<Vec2> u, std::span<Vec2> v_half, std::span<const Vec2> v, std::span<const Vec2> a,
                     double dt) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        v_half[i] = v[i] + 0.5 * dt * a[i];
        u[i] += dt * v_half[i];
    }
}

void newmark_correct(std::span<Vec2> v, std::span<const Vec2> v_half, std::span<const Vec2> a, double dt) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = v_half[i] + 0.5 * dt * a[i];
}

void Simulation::advance(double t_new, double dt, double damping, bool plastic, bool hold) {
    const std::size_t n = size();
    newmark_predict(u_, v_half_, v_, a_, dt);
    apply_constraints(t_new, hold, u_, v_half_);
    const auto& x0 = setup_.points.positions;
    for (std::size_t i = 0; i < n; ++i) y_[i] = x0[i] + u_[i];
    update_stress(plastic);
    assemble_forces(t_new, v_half_, damping, dt, hold);
    newmark_correct(v_, v_half_, a_, dt);
    apply_constraints(t_new, hold, u_, v_);
}

void ensure_finite(std::span<const Vec2> field, long step, const char* what) {
    for (std::size_t i = 0; i < field.size(); ++i)
        if (!field[i].allFinite())
            throw NumericalError(fmt::format("non-finite {} (unstable time step?)", what), i, step);
}

void Simulation::check_finite() const {
    ensure_finite(u_, step_, "displacement");
    ensure_finite(v_, step_, "velocity");
    ensure_finite(a_, step_, "acceleration");
}

std::vector<Mat3> Simulation::initial_stress_field() const {
    const auto& pts = setup_.points;
    const std::size_t n = size();
    const auto& init = setup_.initial;

    // Free-surface height of every lattice column.
    std::map<int, double> column_top;
    for (std::size_t i = 0; i < n; ++i) {
        const double top = pts.positions[i].y() + 0.5 * pts.spacing;
        auto [it, inserted] = column_top.emplace(pts.cells[i][0], top);
        if (!inserted) it->second = std::max(it->second, top);
    }

    std::vector<Mat3> sigma0(n, Mat3::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        switch (init.kind) {
            case InitialStressKind::None: break;
            case InitialStressKind::Uniform: sigma0[i] = init.uniform; break;
            case InitialStressKind::Geostatic: {
                const double depth = column_top.at(pts.cells[i][0]) - pts.positions[i].y();
                sigma0[i] = geostatic_stress(pts.densities[i], -setup_.gravity.y(), depth, init.k0);
                break;
            }
        }
    }
    return sigma0;
}

long Simulation::initialize() {
    const auto& pts = setup_.points;
    const std::size_t n = size();
    const auto& moduli = setup_.material.moduli;

    const std::vector<Mat3> sigma0 = initial_stress_field();
    for (std::size_t i = 0; i < n; ++i) be_[i] = be_from_kirchhoff(sigma0[i], moduli);

    std::fill(u_.begin(), u_.end(), Vec2::Zero());
    std::fill(v_.begin(), v_.end(), Vec2::Zero());
    std::fill(u_init_.begin(), u_init_.end(), Vec2::Zero());
    y_ = pts.positions;
    time_ = 0.0;
    step_ = 0;

    // Accelerations of the initial state.
    update_stress(false);
    assemble_forces(0.0, v_, 0.0, setup_.integrator.dt, true);

    long steps = 0;
    relax_trace_.clear();
    const auto& rc = setup_.relaxation;
    if (rc.enabled) {
        const double dt = rc.dt.value_or(setup_.integrator.dt);
        double peak = 0.0;
        for (;;) {
            const double ke = kinetic_energy();
            peak = std::max(peak, ke);
            if (steps % 100 == 0) relax_trace_.emplace_back(steps, ke);
            if (steps >= rc.min_steps && ke <= rc.energy_ratio * peak) break;
            if (steps >= rc.max_steps) {
                std::string trace;
                const std::size_t from = relax_trace_.size() > 5 ? relax_trace_.size() - 5 : 0;
                for (std::size_t k = from; k < relax_trace_.size(); ++k)
                    trace += fmt::format(" {}:{:.3e}", relax_trace_[k].first, relax_trace_[k].second);
                throw NumericalError(fmt::format("relaxation did not converge within {} steps (peak KE {:.3e}; trace{})",
                                                 rc.max_steps, peak, trace));
            }
            advance(0.0, dt, rc.damping, false, true);
            ++steps;
            check_finite();
        }
        relax_trace_.emplace_back(steps, kinetic_energy());
    }

    std::fill(v_.begin(), v_.end(), Vec2::Zero());
    u_init_ = u_;
    std::fill(eps_ps_.begin(), eps_ps_.end(), 0.0);
    std::fill(eps_pv_.begin(), eps_pv_.end(), 0.0);
    std::fill(dgamma_.begin(), dgamma_.end(), 0.0);
    plastic_ = setup_.material.yield_enabled;
    damping_ = setup_.damping;
    // Accelerations of the relaxed state at the start of the dynamic phase.
    assemble_forces(0.0, v_, 0.0, setup_.integrator.dt, false);
    time_ = 0.0;
    step_ = 0;
    return steps;
}

void Simulation::step() {
    advance(time_ + setup_.integrator.dt, setup_.integrator.dt, damping_, plastic_, false);
    time_ += setup_.integrator.dt;
    ++step_;
    check_finite();
}

void Simulation::run_until(double end_time, const std::function<void(const Simulation&)>& observer) {
    // Integer step count avoids drift from repeated floating-point additions.
    const double dt = setup_.integrator.dt;
    const long target = static_cast<long>(std::llround(end_time / dt));
    while (step_ < target) {
        step();
        if (observer) observer(*this);
    }
}

std::vector<Vec2> Simulation::current_positions() const { return y_; }

KinematicState Simulation::kinematic_state(std::size_t i) const {
    KinematicState k;
    k.F = F_[i];
    k.Fdot = embed(reduce_field(setup_.family, i, v_), 0.0);
    k.L = velocity_gradient(k.Fdot, k.F);
    k.d = rate_of_deformation(k.L);
    const PolarDecomposition pd = polar_rotation(k.F);
    k.R = pd.R;
    k.V = pd.V;
    k.b = k.F * k.F.transpose();
    k.be = be_[i];
    k.J = k.F.determinant();
    return k;
}

double Simulation::kinetic_energy() const {
    double ke = 0.0;
    for (std::size_t i = 0; i < size(); ++i) ke += 0.5 * mass_[i] * v_[i].squaredNorm();
    return ke;
}

Vec2 Simulation::momentum() const {
    Vec2 p = Vec2::Zero();
    for (std::size_t i = 0; i < size(); ++i) p += mass_[i] * v_[i];
    return p;
}

Vec2 Simulation::resultant_internal_force(std::span<const std::size_t> points) const {
    Vec2 f = Vec2::Zero();
    for (const auto i : points) f += internal_[i] * setup_.points.volumes[i];
    return f;
}

Simulation::State Simulation::state() const {
    return State{time_, step_, plastic_, u_, v_, a_, u_init_, F_, be_, tau_, zeta_, eps_ps_, eps_pv_, dgamma_};
}

void Simulation::restore(const State& s) {
    const std::size_t n = size();
    if (s.u.size() != n || s.v.size() != n || s.a.size() != n || s.F.size() != n || s.be.size() != n)
        throw ConfigError("restored state does not match the model size");
    time_ = s.time;
    step_ = s.step;
    plastic_ = s.plastic;
    u_ = s.u;
    v_ = s.v;
    a_ = s.a;
    u_init_ = s.u_init;
    F_ = s.F;
    be_ = s.be;
    tau_ = s.tau;
    zeta_ = s.zeta;
    eps_ps_ = s.eps_ps;
    eps_pv_ = s.eps_pv;
    dgamma_ = s.dgamma;
    const auto& x0 = setup_.points.positions;
    for (std::size_t i = 0; i < n; ++i) {
        y_[i] = x0[i] + u_[i];
        F2_[i] = in_plane(F_[i]);
        grad_[i] = reduce_field(setup_.family, i, u_);
        const Mat2 inv = F2_[i].inverse();
        piola_[i] = tau_[i] * embed(inv.transpose(), 1.0);
        stress_map_[i] = in_plane(piola_[i]) * setup_.family.shape_inv[i];
    }
    // Internal forces at the restored configuration (reaction diagnostics).
    assemble_forces(time_, v_, 0.0, setup_.integrator.dt, false);
    a_ = s.a;
}

}  // namespace ppm
