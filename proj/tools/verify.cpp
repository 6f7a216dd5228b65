#include "verify.hpp"

#include "ppm/dynamics.hpp"
#include "ppm/error.hpp"
#include "ppm/kinematics.hpp"
#include "ppm/lattice.hpp"
#include "ppm/plasticity.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace ppm::verify {

bool SuiteResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Lattice {
    PointSet points;
    Family family;
};

Lattice square_lattice(int cells, double dx, double horizon_ratio = 3.0, bool volume_correction = true) {
    Lattice l;
    l.points = build_grid(Rectangle{0.0, 0.0, cells * dx, cells * dx}, dx);
    assign_partial_density(l.points, 1600.0, 0.0);
    l.family = build_families(l.points, horizon_ratio * dx, {InfluenceKind::Constant, volume_correction});
    return l;
}

/// Points at least `margin` away from every edge of the square.
std::vector<std::size_t> interior(const PointSet& pts, double size, double margin) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec2& x = pts.positions[i];
        if (x.x() > margin && x.y() > margin && x.x() < size - margin && x.y() < size - margin) out.push_back(i);
    }
    return out;
}

struct NamedMaterial {
    std::string name;
    ElasticModuli moduli;
    DruckerPragerParams dp;
    double ev_lo, ev_hi, dev, zeta_max;  // sampling ranges of the trial states
};

std::vector<NamedMaterial> reference_materials() {
    NamedMaterial biaxial{"biaxial material", ElasticModuli::from_bulk_shear(3.8e6, 2.2e6),
                          DruckerPragerParams{20e3, 8e3, -20e3, 35.0, 15.0, ConeFit::Compression},
                          -0.05, 0.02, 0.03, 1.0};
    NamedMaterial slope{"slope material", ElasticModuli::from_young_poisson(1e6, 0.495),
                        DruckerPragerParams{35e3, 10e3, -1e3, 0.0, 0.0, ConeFit::Compression},
                        -0.005, 0.005, 0.2, 40.0};
    return {biaxial, slope};
}

/// Random plane-strain elastic left Cauchy-Green tensor from principal log strains.
Mat3 random_be(std::mt19937_64& rng, double ev_lo, double ev_hi, double dev) {
    std::uniform_real_distribution<double> uv(ev_lo, ev_hi);
    std::uniform_real_distribution<double> ud(-dev, dev);
    std::uniform_real_distribution<double> ua(0.0, std::numbers::pi);
    const double ev = uv(rng);
    Vec3 d(ud(rng), ud(rng), ud(rng));
    d -= Vec3::Constant(d.sum() / 3.0);
    const Vec3 eps = d + Vec3::Constant(ev / 3.0);
    const Mat3 Q = embed(rotation2(ua(rng)), 1.0);
    Mat3 b = Mat3::Zero();
    for (int k = 0; k < 3; ++k) b(k, k) = std::exp(2.0 * eps(k));
    return Q * b * Q.transpose();
}

/// Independent oracle: integrate the principal log strains along the plastic
/// flow in `substeps` RK4 steps of the multiplier and bisect on the multiplier
/// for the consistency condition.
struct OracleResult {
    double p = 0.0;
    double q = 0.0;
    double zeta = 0.0;
    bool plastic = false;
};

OracleResult return_oracle(const Mat3& be_trial, double zeta_n, const ElasticModuli& m, const DruckerPragerParams& dp,
                           int substeps) {
    const double K = m.bulk;
    const double G = m.shear;
    const ConeCoefficients a = dp.alphas();
    Eigen::SelfAdjointEigenSolver<Mat3> es(be_trial);
    Vec3 eps0;
    for (int k = 0; k < 3; ++k) eps0(k) = 0.5 * std::log(es.eigenvalues()(k));

    const auto stress = [&](const Vec3& e, double& p, double& q, Vec3& s) {
        const double ev = e.sum();
        p = K * ev;
        s = 2.0 * G * (e - Vec3::Constant(ev / 3.0));
        q = std::sqrt(1.5) * s.norm();
    };
    const auto cohesion = [&](double zeta) {
        const double c = dp.c0 + dp.h * zeta;
        return dp.h < 0.0 ? std::max(c, dp.c_residual) : c;
    };
    const auto yield = [&](const Vec3& e, double zeta) {
        double p, q;
        Vec3 s;
        stress(e, p, q, s);
        return q + a.a1 * p - a.a2 * cohesion(zeta);
    };
    // Flow direction in principal log-strain space; the deviator is dropped
    // once it has been consumed (apex).
    const double q_floor = 1e-14 * (K + G);
    const auto flow = [&](const Vec3& e) {
        double p, q;
        Vec3 s;
        stress(e, p, q, s);
        Vec3 n = Vec3::Constant(a.a3 / 3.0);
        if (q > q_floor) n += std::sqrt(1.5) * s / s.norm();
        return n;
    };
    const auto deviator = [](const Vec3& e) { return Vec3(e - Vec3::Constant(e.sum() / 3.0)); };
    // One RK4 step; a step whose stages see the deviator reverse straddles the
    // apex and is split until the crossing is resolved.
    const std::function<Vec3(const Vec3&, double, int)> rk4 = [&](const Vec3& e, double h, int depth) -> Vec3 {
        const Vec3 d0 = deviator(e);
        const bool at_apex = std::sqrt(1.5) * 2.0 * G * d0.norm() <= q_floor;
        const Vec3 k1 = -flow(e);
        const Vec3 e2 = e + 0.5 * h * k1;
        const Vec3 k2 = -flow(e2);
        const Vec3 e3 = e + 0.5 * h * k2;
        const Vec3 k3 = -flow(e3);
        const Vec3 e4 = e + h * k3;
        const Vec3 k4 = -flow(e4);
        const Vec3 next = e + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const bool crossed = !at_apex && (deviator(e2).dot(d0) <= 0.0 || deviator(e3).dot(d0) <= 0.0 ||
                                          deviator(e4).dot(d0) <= 0.0 || deviator(next).dot(d0) <= 0.0);
        if (!crossed) return next;
        if (depth > 60) return Vec3(Vec3::Constant((e.sum() - h * a.a3) / 3.0));
        return rk4(rk4(e, 0.5 * h, depth + 1), 0.5 * h, depth + 1);
    };
    const auto integrate = [&](double gamma) {
        Vec3 e = eps0;
        const double h = gamma / substeps;
        for (int k = 0; k < substeps; ++k) e = rk4(e, h, 0);
        return e;
    };

    OracleResult out;
    out.zeta = zeta_n;
    if (yield(eps0, zeta_n) <= yield_tolerance(m)) {
        Vec3 s;
        stress(eps0, out.p, out.q, s);
        return out;
    }
    out.plastic = true;
    double lo = 0.0;
    double hi = 1e-6;
    while (yield(integrate(hi), zeta_n + a.a4 * hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("oracle failed to bracket the plastic multiplier");
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (yield(integrate(mid), zeta_n + a.a4 * mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double gamma = 0.5 * (lo + hi);
    Vec3 s;
    stress(integrate(gamma), out.p, out.q, s);
    out.zeta = zeta_n + a.a4 * gamma;
    return out;
}

double q_of(const Mat3& tau) {
    const Mat3 s = tau - (tau.trace() / 3.0) * Mat3::Identity();
    return std::sqrt(1.5) * s.norm();
}

}  // namespace

SuiteResult affine_exactness(int maps) {
    const auto t0 = Clock::now();
    SuiteResult r{"affine exactness", {}, 0.0};
    const Lattice l = square_lattice(30, 1.0);
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    double worst = 0.0;
    int used = 0;
    while (used < maps) {
        Mat2 A;
        A << 1.0 + u(rng), u(rng), u(rng), 1.0 + u(rng);
        if (A.determinant() < 0.2) continue;
        ++used;
        const Vec2 c(u(rng), u(rng));
        std::vector<Vec2> disp(l.points.size());
        for (std::size_t i = 0; i < disp.size(); ++i) disp[i] = (A - Mat2::Identity()) * l.points.positions[i] + c;
        const std::vector<Vec2> vel(l.points.size(), Vec2::Zero());
        const auto F = nonlocal_F(deformation_states(l.family, disp, vel), l.family);
        for (const auto& Fi : F) worst = std::max(worst, (in_plane(Fi) - A).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    r.checks.push_back({"F equals the affine gradient at every point", worst <= 1e-12,
                        fmt::format("{} maps, max |F - A| = {:.2e} (tol 1e-12)", used, worst)});
    r.checks.push_back({"runtime", secs < 5.0, fmt::format("{:.3f} s (limit 5 s)", secs)});
    r.seconds = secs;
    return r;
}

SuiteResult return_mapping(int states, int substeps) {
    const auto t0 = Clock::now();
    SuiteResult r{"return mapping oracle", {}, 0.0};
    for (const auto& mat : reference_materials()) {
        std::mt19937_64 rng(7 + static_cast<unsigned>(mat.name.size()));
        std::uniform_real_distribution<double> uz(0.0, mat.zeta_max);
        double worst_rel = 0.0;
        double worst_yield = 0.0;
        int plastic = 0;
        int apex = 0;
        const double tol_yield = yield_tolerance(mat.moduli);
        for (int k = 0; k < states; ++k) {
            const Mat3 be = random_be(rng, mat.ev_lo, mat.ev_hi, mat.dev);
            const double zeta_n = uz(rng);
            ReturnResult got;
            try {
                got = return_map(be, zeta_n, mat.moduli, mat.dp);
            } catch (const std::exception& e) {
                worst_rel = 1e300;
                r.checks.push_back({mat.name + ": return mapping threw", false, e.what()});
                continue;
            }
            const OracleResult want = return_oracle(be, zeta_n, mat.moduli, mat.dp, substeps);
            const double p = got.tau.trace() / 3.0;
            const double q = q_of(got.tau);
            const double stress_scale = mat.dp.c0;
            worst_rel = std::max(worst_rel, std::abs(p - want.p) / std::max(std::abs(want.p), stress_scale));
            worst_rel = std::max(worst_rel, std::abs(q - want.q) / std::max(std::abs(want.q), stress_scale));
            worst_rel = std::max(worst_rel, std::abs(got.zeta - want.zeta) / std::max(std::abs(want.zeta), 1e-12));
            if (got.plastic != want.plastic) worst_rel = 1e300;
            if (got.plastic) {
                ++plastic;
                apex += got.apex ? 1 : 0;
                const double f = yield_value(p, q, got.cohesion, mat.dp.alphas());
                worst_yield = std::max(worst_yield, std::abs(f));
            }
        }
        r.checks.push_back({mat.name + ": (p, q, zeta) vs sub-stepped oracle", worst_rel <= 1e-4,
                            fmt::format("{} states ({} plastic, {} apex), max rel error {:.2e} (tol 1e-4)", states,
                                        plastic, apex, worst_rel)});
        r.checks.push_back({mat.name + ": yield consistency", worst_yield <= tol_yield,
                            fmt::format("max |F| = {:.2e} Pa (tol {:.2e})", worst_yield, tol_yield)});
    }
    r.seconds = seconds_since(t0);
    return r;
}

namespace {

/// Period of a fixed-free spring-mass pair integrated by the library Newmark kernel.
double chain_frequency(double k, double m, double dt, double duration) {
    std::vector<Vec2> u{Vec2::Zero(), Vec2(1.0, 0.0)};
    std::vector<Vec2> v(2, Vec2::Zero());
    std::vector<Vec2> a{Vec2::Zero(), Vec2(-k / m, 0.0)};
    std::vector<Vec2> vh(2, Vec2::Zero());
    const long steps = std::lround(duration / dt);
    double first = -1.0;
    double last = -1.0;
    int crossings = 0;
    double prev = u[1].x();
    for (long s = 1; s <= steps; ++s) {
        newmark_predict(u, vh, v, a, dt);
        u[0] = Vec2::Zero();
        a[0] = Vec2::Zero();
        a[1] = Vec2(-k * (u[1].x() - u[0].x()) / m, 0.0);
        newmark_correct(v, vh, a, dt);
        ensure_finite(u, s, "chain displacement");
        const double cur = u[1].x();
        if (prev < 0.0 && cur >= 0.0) {
            const double tc = (s - 1) * dt + dt * (-prev) / (cur - prev);
            if (first < 0.0) first = tc;
            last = tc;
            ++crossings;
        }
        prev = cur;
    }
    return 2.0 * std::numbers::pi * (crossings - 1) / (last - first);
}

}  // namespace

SuiteResult integrator() {
    const auto t0 = Clock::now();
    SuiteResult r{"integrator", {}, 0.0};

    // Free fall of an unstressed block.
    {
        ModelSetup s;
        s.points = build_grid(Rectangle{0.0, 0.0, 6.0, 6.0}, 1.0);
        assign_partial_density(s.points, 1600.0, 0.0);
        s.family = build_families(s.points, 3.0);
        s.material.moduli = ElasticModuli::from_bulk_shear(3.8e6, 2.2e6);
        s.material.plasticity = DruckerPragerParams{20e3, 8e3, -20e3, 35.0, 15.0, ConeFit::Compression};
        s.material.yield_enabled = false;
        s.gravity = Vec2(0.0, -9.81);
        s.integrator.dt = 1e-4;
        Simulation sim(s);
        sim.initialize();
        double worst = 0.0;
        for (long k = 1; k <= 10000; ++k) {
            sim.step();
            const double t = sim.time();
            const double exact = -0.5 * 9.81 * t * t;
            for (const auto& u : sim.displacement()) {
                worst = std::max(worst, std::abs(u.y() - exact) / std::abs(exact));
                worst = std::max(worst, std::abs(u.x()) / std::abs(exact));
            }
        }
        r.checks.push_back({"free fall matches g t^2 / 2", worst <= 1e-12,
                            fmt::format("10^4 steps, max relative error {:.2e} (tol 1e-12)", worst)});
    }

    // Two-point chain: O(dt^2) frequency convergence.
    {
        const double m = 1.0;
        const double k = 4.0 * std::numbers::pi * std::numbers::pi;
        const double w0 = std::sqrt(k / m);
        const double dt = 1.0 / 40.0;
        const double e1 = std::abs(chain_frequency(k, m, dt, 400.0) - w0);
        const double e2 = std::abs(chain_frequency(k, m, dt / 2.0, 400.0) - w0);
        const double ratio = e1 / e2;
        r.checks.push_back({"chain frequency error ratio on halving dt", std::abs(ratio - 4.0) <= 0.5,
                            fmt::format("errors {:.3e}, {:.3e}; ratio {:.3f} (4 +- 0.5)", e1, e2, ratio)});

        // Stability guard at 1.5 dt_crit with dt_crit = 2 / w0.
        bool caught = false;
        std::string what;
        try {
            chain_frequency(k, m, 1.5 * 2.0 / w0, 1e4);
        } catch (const NumericalError& e) {
            caught = true;
            what = e.what();
        }
        r.checks.push_back({"divergence at 1.5 dt_crit aborts", caught, caught ? what : "no error raised"});
    }
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult equilibrium_objectivity() {
    const auto t0 = Clock::now();
    SuiteResult r{"equilibrium and objectivity", {}, 0.0};

    // Uniform stress: zero net force wherever the stencil is complete.
    {
        const int cells = 30;
        const Lattice l = square_lattice(cells, 1.0);
        Mat2 P;
        P << -1e5, 3e4, 3e4, -2e5;
        const std::vector<Mat2> piola(l.points.size(), P);
        const auto L = force_state(l.family, piola);
        double worst = 0.0;
        for (const auto i : interior(l.points, cells, 2.0 * l.family.horizon + 0.5)) worst = std::max(worst, L[i].norm());
        const double tol = 1e-10 * 2e5;
        r.checks.push_back({"uniform stress gives zero interior force", worst <= tol,
                            fmt::format("max |L| = {:.2e} N/m^3 (tol {:.1e})", worst, tol)});
    }

    // Momentum of a free elastic block with random velocities.
    {
        ModelSetup s;
        s.points = build_grid(Rectangle{0.0, 0.0, 12.0, 12.0}, 1.0);
        assign_partial_density(s.points, 1600.0, 0.0);
        s.family = build_families(s.points, 3.0);
        s.material.moduli = ElasticModuli::from_bulk_shear(3.8e6, 2.2e6);
        s.material.plasticity = DruckerPragerParams{20e3, 8e3, -20e3, 35.0, 15.0, ConeFit::Compression};
        s.integrator.dt = 1e-4;
        Simulation sim(s);
        sim.initialize();
        auto st = sim.state();
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> uv(-0.5, 0.5);
        for (auto& v : st.v) v = Vec2(uv(rng), uv(rng));
        sim.restore(st);
        double scale = 0.0;
        for (std::size_t i = 0; i < sim.size(); ++i)
            scale += s.points.densities[i] * s.points.volumes[i] * sim.velocity()[i].norm();
        const Vec2 p0 = sim.momentum();
        for (int k = 0; k < 1000; ++k) sim.step();
        const double drift = (sim.momentum() - p0).norm() / scale;
        r.checks.push_back({"momentum conserved over 1000 steps", drift <= 1e-10,
                            fmt::format("relative drift {:.2e} (tol 1e-10)", drift)});
    }

    // Rotating the trial state rotates the returned stress.
    {
        double worst = 0.0;
        double tol = 0.0;
        for (const auto& mat : reference_materials()) {
            std::mt19937_64 rng(5);
            std::uniform_real_distribution<double> ua(-std::numbers::pi, std::numbers::pi);
            std::uniform_real_distribution<double> uz(0.0, mat.zeta_max);
            tol = 1e-9 * mat.moduli.shear;
            double local = 0.0;
            for (int k = 0; k < 100; ++k) {
                const Mat3 be = random_be(rng, mat.ev_lo, mat.ev_hi, mat.dev);
                const Mat3 Q = embed(rotation2(ua(rng)), 1.0);
                const double zeta = uz(rng);
                const ReturnResult a = return_map(be, zeta, mat.moduli, mat.dp);
                const ReturnResult b = return_map(Q * be * Q.transpose(), zeta, mat.moduli, mat.dp);
                local = std::max(local, (Q * a.tau * Q.transpose() - b.tau).cwiseAbs().maxCoeff());
            }
            worst = std::max(worst, local / mat.moduli.shear);
            r.checks.push_back({mat.name + ": stress kernel commutes with rotation", local <= tol,
                                fmt::format("max |Q tau Q^T - tau(Q be Q^T)| = {:.2e} Pa (tol {:.2e})", local, tol)});
        }
    }
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult zero_energy_mode() {
    const auto t0 = Clock::now();
    SuiteResult r{"zero-energy mode", {}, 0.0};
    const int cells = 24;
    const Lattice l = square_lattice(cells, 1.0);
    const auto& pts = l.points;
    const ElasticModuli m = ElasticModuli::from_bulk_shear(3.8e6, 2.2e6);
    std::vector<Vec2> y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const int parity = (pts.cells[i][0] + pts.cells[i][1]) % 2 == 0 ? 1 : -1;
        y[i] = pts.positions[i] + 0.01 * parity * Vec2(1.0, 1.0);
    }
    std::vector<Mat2> F(pts.size());
    std::vector<Mat2> P(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        F[i] = reduce_field(l.family, i, y);
        const Mat3 F3 = embed(F[i], 1.0);
        const Mat3 tau = kirchhoff_from_be(F3 * F3.transpose(), m);
        P[i] = in_plane(Mat3(tau * F3.inverse().transpose()));
    }
    const auto L = force_state(l.family, P);
    const auto S = stabilization_force(l.family, y, F, 0.5, micromodulus(m, l.family.horizon));
    double corr = 0.0;
    double stab_min = 1e300;
    double stab_max = 0.0;
    for (const auto i : interior(pts, cells, 2.0 * l.family.horizon + 0.5)) {
        corr = std::max(corr, L[i].norm());
        stab_min = std::min(stab_min, S[i].norm());
        stab_max = std::max(stab_max, S[i].norm());
    }
    r.checks.push_back({"checkerboard: zero correspondence force", corr <= 1e-10 * stab_max,
                        fmt::format("max |L_corr| = {:.2e} N/m^3 vs max |L_stab| = {:.2e}", corr, stab_max)});
    r.checks.push_back({"checkerboard: nonzero stabilization force on every point", stab_min > 0.0,
                        fmt::format("min |L_stab| = {:.3e} N/m^3", stab_min)});
    const auto S0 = stabilization_force(l.family, y, F, 0.0, micromodulus(m, l.family.horizon));
    double off = 0.0;
    for (const auto& f : S0) off = std::max(off, f.norm());
    r.checks.push_back({"Gstab = 0 switches stabilization off", off == 0.0, fmt::format("max |L_stab| = {:.1e}", off)});
    r.seconds = seconds_since(t0);
    return r;
}

std::vector<std::function<SuiteResult()>> all_suites() {
    return {[] { return affine_exactness(); }, [] { return return_mapping(); }, [] { return integrator(); },
            [] { return equilibrium_objectivity(); }, [] { return zero_energy_mode(); }};
}

void print_table(std::ostream& os, const std::vector<SuiteResult>& results) {
    for (const auto& s : results) {
        os << fmt::format("{:<30} {:>4}  ({:.2f} s)\n", s.name, s.passed() ? "PASS" : "FAIL", s.seconds);
        for (const auto& c : s.checks)
            os << fmt::format("  [{}] {}: {}\n", c.passed ? "ok" : "!!", c.name, c.detail);
    }
}

}  // namespace ppm::verify
