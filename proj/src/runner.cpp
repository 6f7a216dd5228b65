#include "ppm/runner.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifdef PPM_HAVE_OPENMP
#include <omp.h>
#endif

namespace ppm {

namespace fs = std::filesystem;

int default_thread_count() {
    const char* env = std::getenv(kThreadsEnv);
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError(fmt::format("{} must be a positive integer, got '{}'", kThreadsEnv, env));
    return static_cast<int>(n);
}

int set_thread_count(int threads) {
#ifdef PPM_HAVE_OPENMP
    if (threads > 0) omp_set_num_threads(threads);
    return omp_get_max_threads();
#else
    (void)threads;
    return 1;
#endif
}

Snapshot make_snapshot(const ModelSetup& setup, const Simulation::State& st, std::span<const double> w2,
                       std::span<const SnapshotField> fields) {
    const auto& pts = setup.points;
    const std::size_t n = pts.size();
    Snapshot s;
    s.time = st.time;
    s.step = st.step;
    s.positions.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.positions[i] = pts.positions[i] + st.u[i];
    for (const auto f : fields) {
        std::vector<double> v(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            switch (f) {
                case SnapshotField::Displacement: v[i] = (st.u[i] - st.u_init[i]).norm(); break;
                case SnapshotField::EpsPs: v[i] = st.eps_ps[i]; break;
                case SnapshotField::EpsPv: v[i] = st.eps_pv[i]; break;
                case SnapshotField::W2: v[i] = w2.empty() ? 0.0 : w2[i]; break;
                case SnapshotField::MeanStress: v[i] = st.tau[i].trace() / 3.0; break;
                case SnapshotField::Q: v[i] = invariants(st.tau[i]).q; break;
            }
        }
        s.fields.emplace_back(field_name(f), std::move(v));
    }
    return s;
}

namespace {

std::string scenario_text(const Scenario& sc) {
    std::ostringstream ss;
    write_scenario(ss, sc);
    return ss.str();
}

long steps_for(double seconds, double dt) {
    return seconds > 0.0 ? std::max(1L, static_cast<long>(std::llround(seconds / dt))) : 0;
}

fs::path snapshot_name(long index) { return fs::path("snapshots") / fmt::format("snapshot_{:06d}.vtk", index); }

std::string profile_csv(std::span<const ProfileBin> profile) {
    std::ostringstream ss;
    write_ground_profile(ss, profile);
    return ss.str();
}

struct ProfileRange {
    double x_min = 0.0;
    double x_max = 0.0;
    double bin = 1.0;
};

ProfileRange profile_range(const Scenario& sc) {
    const Rectangle box = bounding_box(sc.geometry->region);
    // Leave room for run-out beyond the reference footprint.
    return {box.x_min, box.x_max + 2.0 * (box.y_max - box.y_min),
            sc.output.profile_bin.value_or(sc.discretization.spacing)};
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const RunOptions& opt) {
    const auto wall_start = std::chrono::steady_clock::now();
    const auto say = [&](const std::string& msg) {
        if (opt.progress) opt.progress(msg);
    };
    if (opt.threads > 0) set_thread_count(opt.threads);

    RunResult result;
    result.directory = opt.output_dir.empty() ? fs::path(sc.output.directory) : opt.output_dir;
    const fs::path dir = result.directory;
    std::error_code ec;
    fs::create_directories(dir / "snapshots", ec);
    if (ec) throw Error(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

    const std::string text = scenario_text(sc);
    const std::uint64_t hash = fnv1a(text);
    write_text(dir / "scenario.yaml", text);

    ModelSetup setup = build_setup(sc);
    {
        std::ostringstream ss;
        write_report(ss, make_report(setup.points, setup.family));
        write_text(dir / "lattice_report.txt", ss.str());
    }
    say(fmt::format("{} points, {} bonds", setup.points.size(), setup.family.bond_count()));
    const ModelSetup& model = setup;
    Simulation sim(setup);

    const double dt = sc.integrator.dt;
    const long total = static_cast<long>(std::llround(sc.integrator.end_time / dt));
    const long stop = opt.stop_time ? std::min(total, static_cast<long>(std::llround(*opt.stop_time / dt))) : total;
    const long snap_every = steps_for(sc.output.interval, dt);
    const long log_every = sc.output.log_interval > 0.0 ? steps_for(sc.output.log_interval, dt) : snap_every;
    const long ckpt_every = steps_for(opt.checkpoint_every.value_or(sc.output.checkpoint_every.value_or(0.0)), dt);

    // Reaction driver.
    std::vector<std::size_t> driven;
    Vec2 drive = Vec2::Zero();
    const BoundaryCondition* driver = nullptr;
    if (sc.output.reaction) {
        for (std::size_t c = 0; c < sc.conditions.size(); ++c) {
            if (sc.conditions[c].name != *sc.output.reaction) continue;
            driver = &sc.conditions[c];
            driven = sim.selection(c);
            const double end_value = driver->schedule.points().back().second;
            drive(driver->component) = end_value < 0.0 ? -1.0 : 1.0;
        }
    }

    std::vector<ManifestEntry> manifest;
    std::vector<LoadPoint> curve;
    std::vector<Mat3> window_piola;
    std::vector<Mat3> window_F;
    const ProfileRange pr = profile_range(sc);

    const auto sample_curve = [&]() {
        if (!driver) return;
        LoadPoint p;
        p.time = sim.time();
        p.displacement = std::abs(driver->schedule.value(sim.time()));
        p.reaction = reaction_force(sim.internal_force(), model.points.volumes, driven, drive);
        curve.push_back(p);
    };

    const auto take_snapshot = [&]() {
        std::vector<double> w2;
        const auto piola = sim.piola();
        const auto F = sim.deformation_gradient();
        if (!window_piola.empty()) w2 = second_order_work(window_piola, piola, window_F, F);
        window_piola.assign(piola.begin(), piola.end());
        window_F.assign(F.begin(), F.end());
        const Snapshot snap = make_snapshot(model, sim.state(), w2, sc.output.fields);
        ManifestEntry e;
        e.index = static_cast<long>(manifest.size());
        e.step = sim.step_index();
        e.time = sim.time();
        e.file = snapshot_name(e.index).generic_string();
        write_vtk(dir / e.file, snap);
        manifest.push_back(e);
        write_manifest(dir / "manifest.csv", manifest);
    };

    std::ofstream log;
    const auto open_log = [&](bool append) {
        log.open(dir / "run_log.csv", append ? std::ios::app : std::ios::trunc);
        if (!log) throw Error(fmt::format("cannot open run log in '{}'", dir.string()));
        if (!append) log << "step,time,kinetic_energy,max_eps_ps,wall_time\n";
    };
    const auto log_line = [&]() {
        double max_eps = 0.0;
        for (const double e : sim.eps_ps()) max_eps = std::max(max_eps, e);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
        log << fmt::format("{},{:.6f},{:.9e},{:.9e},{:.3f}\n", sim.step_index(), sim.time(), sim.kinetic_energy(),
                           max_eps, wall);
        log.flush();
    };

    const auto write_curve = [&]() {
        if (!driver) return;
        std::ostringstream ss;
        write_loading_curve(ss, curve);
        write_text(dir / "loading_curve.csv", ss.str());
    };

    if (opt.restart) {
        Checkpoint ck = read_checkpoint(*opt.restart);
        if (ck.scenario_hash != hash)
            throw ConfigError(fmt::format("checkpoint '{}' was written for a different scenario", opt.restart->string()));
        sim.restore(ck.state);
        result.relaxation_steps = ck.relaxation_steps;
        manifest = std::move(ck.manifest);
        curve = std::move(ck.curve);
        window_piola = std::move(ck.window_piola);
        window_F = std::move(ck.window_F);
        open_log(true);
        say(fmt::format("restarted from step {} (t = {:.6f} s)", sim.step_index(), sim.time()));
    } else {
        result.relaxation_steps = sim.initialize();
        say(fmt::format("initialization: {} relaxation steps", result.relaxation_steps));
        write_text(dir / "ground_profile_initial.csv",
                   profile_csv(ground_profile(sim.current_positions(), pr.bin, pr.x_min, pr.x_max)));
        open_log(false);
        log_line();
        sample_curve();
        if (snap_every > 0) take_snapshot();
    }

    const auto checkpoint = [&]() {
        Checkpoint ck;
        ck.scenario_hash = hash;
        ck.state = sim.state();
        ck.relaxation_steps = result.relaxation_steps;
        ck.window_piola = window_piola;
        ck.window_F = window_F;
        ck.manifest = manifest;
        ck.curve = curve;
        write_checkpoint(dir / "checkpoint.bin", ck);
    };

    // Refreshed every few steps so a divergence can be inspected shortly before it happened.
    Simulation::State last_good = sim.state();
    try {
        while (sim.step_index() < stop) {
            if (sim.step_index() % 50 == 0) last_good = sim.state();
            sim.step();
            const long k = sim.step_index();
            const bool at_end = k == total;
            if ((log_every > 0 && k % log_every == 0) || at_end) {
                log_line();
                sample_curve();
            }
            if (snap_every > 0 && (k % snap_every == 0 || at_end)) take_snapshot();
            if (ckpt_every > 0 && k % ckpt_every == 0) checkpoint();
            if (snap_every > 0 && k % snap_every == 0) say(fmt::format("t = {:.4f} s, KE = {:.4e}", sim.time(), sim.kinetic_energy()));
        }
    } catch (const NumericalError& e) {
        const fs::path dump = dir / "snapshots" / "last_good.vtk";
        write_vtk(dump, make_snapshot(model, last_good, {}, sc.output.fields));
        throw NumericalError(fmt::format("{}; last good state (step {}) dumped to {}", e.what(), last_good.step,
                                         dump.string()));
    }

    write_curve();
    write_text(dir / "ground_profile.csv",
               profile_csv(ground_profile(sim.current_positions(), pr.bin, pr.x_min, pr.x_max)));
    result.steps = sim.step_index();
    result.snapshots = manifest.size();
    result.curve = curve;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

}  // namespace ppm
