#include "ppm/output.hpp"
#include "ppm/runner.hpp"
#include "ppm/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ppm;
namespace fs = std::filesystem;

namespace {

fs::path scenario_dir() { return fs::path(PPM_SOURCE_DIR) / "scenarios"; }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ppm_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> all_errors(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.errors();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& errors, const std::string& needle) {
    for (const auto& e : errors)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

// A tiny plastic run with a driven face, used for I/O round trips.
const char* kSmall = R"(
name: small
geometry:
  rectangle: [0.0, 0.0, 6.0, 8.0]
material:
  intrinsic_density: 2000.0
  porosity: 0.2
  bulk_modulus: 3.8e6
  shear_modulus: 2.2e6
  cohesion: 20.0e3
  residual_cohesion: 8.0e3
  hardening_modulus: -20.0e3
  friction_angle: 35.0
  dilatancy_angle: 15.0
discretization:
  spacing: 1.0
integrator:
  dt: 1.0e-3
  end_time: 0.4
boundary_conditions:
  - name: base
    type: fixed
    select: {face: bottom, layers: 1}
  - name: platen
    type: displacement
    select: {face: top, layers: 1}
    component: y
    schedule: [[0.0, 0.0], [0.4, -0.4]]
output:
  interval: 0.1
  reaction: platen
)";

}  // namespace

TEST(Parse, ExampleScenarios) {
    const Scenario bi = load_scenario(scenario_dir() / "biaxial.yaml");
    const auto m1 = bi.material.moduli();
    EXPECT_NEAR(m1.lambda(), 2.3333e6, 50.0);
    EXPECT_DOUBLE_EQ(m1.shear, 2.2e6);
    EXPECT_DOUBLE_EQ(bi.material.solid_partial_density(), 1600.0);

    const Scenario sl = load_scenario(scenario_dir() / "slope_desk.yaml");
    const auto m2 = sl.material.moduli();
    EXPECT_NEAR(m2.shear, 0.3344e6, 100.0);
    EXPECT_NEAR(m2.bulk, 33.33e6, 0.01e6);
    ASSERT_TRUE(sl.base.has_value());
    EXPECT_DOUBLE_EQ(sl.base->mu, 0.3);
    EXPECT_DOUBLE_EQ(sl.initial.k0, 0.5);
}

TEST(Parse, EveryShippedScenarioIsValid) {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(scenario_dir())) {
        if (entry.path().extension() != ".yaml") continue;
        ++count;
        EXPECT_NO_THROW(build_setup(load_scenario(entry.path()))) << entry.path();
    }
    EXPECT_GE(count, 3);
}

TEST(Parse, EmptyFileReportsMissingGeometry) {
    const auto errors = all_errors("");
    EXPECT_TRUE(any_contains(errors, "geometry missing"));
    EXPECT_TRUE(any_contains(errors, "material missing"));
}

TEST(Parse, CollectsEveryProblemWithContext) {
    std::string text = kSmall;
    text.replace(text.find("  porosity: 0.2"), 14, "  porosity: 1.5");
    text.replace(text.find("end_time: 0.4"), 13, "end_time: 0.2");
    text += "colour: blue\n";
    const auto errors = all_errors(text);
    EXPECT_GE(errors.size(), 3u);
    EXPECT_TRUE(any_contains(errors, "colour"));
    EXPECT_TRUE(any_contains(errors, "line "));
    EXPECT_TRUE(any_contains(errors, "porosity"));
    EXPECT_TRUE(any_contains(errors, "schedule"));
}

TEST(Parse, RejectsAmbiguousModuli) {
    std::string text = kSmall;
    text.replace(text.find("  shear_modulus"), 0, "  young_modulus: 1.0e6\n");
    EXPECT_FALSE(all_errors(text).empty());
}

TEST(Parse, RoundTrip) {
    for (const char* name : {"biaxial.yaml", "slope_desk.yaml"}) {
        const Scenario a = load_scenario(scenario_dir() / name);
        std::ostringstream first;
        write_scenario(first, a);
        const Scenario b = parse_scenario(first.str());
        std::ostringstream second;
        write_scenario(second, b);
        EXPECT_EQ(first.str(), second.str()) << name;
        EXPECT_EQ(a.conditions.size(), b.conditions.size());
        EXPECT_EQ(a.material.moduli().bulk, b.material.moduli().bulk);
        EXPECT_EQ(build_setup(a).points.size(), build_setup(b).points.size());
    }
}

TEST(Vtk, SinglePointSnapshot) {
    Snapshot s;
    s.time = 0.25;
    s.step = 2500;
    s.positions = {Vec2(1.5, -2.25)};
    for (auto f : all_snapshot_fields()) s.fields.emplace_back(field_name(f), std::vector<double>{0.125});
    const fs::path dir = scratch("vtk");
    write_vtk(dir / "one.vtk", s);
    const std::string text = slurp(dir / "one.vtk");
    EXPECT_EQ(text.rfind("# vtk DataFile Version", 0), 0u);
    EXPECT_NE(text.find("ASCII"), std::string::npos);
    EXPECT_NE(text.find("POINTS 1 double"), std::string::npos);
    const Snapshot r = read_vtk(dir / "one.vtk");
    ASSERT_EQ(r.positions.size(), 1u);
    EXPECT_EQ(r.positions[0], s.positions[0]);
    EXPECT_EQ(r.time, 0.25);
    EXPECT_EQ(r.step, 2500);
    for (auto f : all_snapshot_fields()) {
        ASSERT_TRUE(r.has_field(field_name(f)));
        EXPECT_EQ(r.field(field_name(f))[0], 0.125);
    }
}

TEST(Checkpoint, VersionedAndHashed) {
    const fs::path dir = scratch("ckpt_format");
    Checkpoint ck;
    ck.scenario_hash = fnv1a("abc");
    ck.state.time = 1.5;
    ck.state.u = {Vec2(0.1, 0.2)};
    write_checkpoint(dir / "c.bin", ck);
    const Checkpoint back = read_checkpoint(dir / "c.bin");
    EXPECT_EQ(back.scenario_hash, ck.scenario_hash);
    EXPECT_EQ(back.state.time, 1.5);
    EXPECT_EQ(back.state.u, ck.state.u);
    // Corrupt the version word.
    std::fstream f(dir / "c.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    f.put(static_cast<char>(0x7f));
    f.close();
    EXPECT_THROW(read_checkpoint(dir / "c.bin"), std::exception);
    EXPECT_NE(fnv1a("abc"), fnv1a("abd"));
}

TEST(Run, WritesOutputsAndIsDeterministic) {
    const Scenario sc = parse_scenario(kSmall);
    RunOptions opt;
    opt.output_dir = scratch("det_a");
    const auto a = run_scenario(sc, opt);
    opt.output_dir = scratch("det_b");
    const auto b = run_scenario(sc, opt);
    EXPECT_EQ(a.snapshots, 5u);
    ASSERT_EQ(a.curve.size(), b.curve.size());
    for (const char* f : {"manifest.csv", "loading_curve.csv", "ground_profile.csv", "ground_profile_initial.csv",
                          "snapshots/snapshot_000000.vtk", "snapshots/snapshot_000004.vtk"}) {
        ASSERT_TRUE(fs::exists(a.directory / f)) << f;
        EXPECT_EQ(slurp(a.directory / f), slurp(b.directory / f)) << f;
    }
    const auto manifest = read_manifest(a.directory / "manifest.csv");
    ASSERT_EQ(manifest.size(), 5u);
    for (std::size_t k = 1; k < manifest.size(); ++k) EXPECT_GT(manifest[k].time, manifest[k - 1].time);
    const Snapshot last = read_vtk(a.directory / "snapshots/snapshot_000004.vtk");
    EXPECT_NEAR(last.time, 0.4, 1e-12);
    const auto curve = read_loading_curve(a.directory / "loading_curve.csv");
    ASSERT_FALSE(curve.empty());
    EXPECT_NEAR(curve.back().displacement, 0.4, 1e-12);
}

TEST(Run, RestartFromCheckpointIsBitExact) {
    const Scenario sc = parse_scenario(kSmall);
    RunOptions full;
    full.output_dir = scratch("restart_full");
    run_scenario(sc, full);

    RunOptions first;
    first.output_dir = scratch("restart_split");
    first.checkpoint_every = 0.1;
    first.stop_time = 0.2;
    run_scenario(sc, first);
    ASSERT_TRUE(fs::exists(first.output_dir / "checkpoint.bin"));

    RunOptions second;
    second.output_dir = first.output_dir;
    second.restart = first.output_dir / "checkpoint.bin";
    run_scenario(sc, second);
    for (const char* f : {"manifest.csv", "loading_curve.csv", "ground_profile.csv", "snapshots/snapshot_000004.vtk"})
        EXPECT_EQ(slurp(full.output_dir / f), slurp(first.output_dir / f)) << f;
}

TEST(Run, CheckpointFromAnotherScenarioIsRejected) {
    RunOptions first;
    first.output_dir = scratch("restart_other");
    first.checkpoint_every = 0.1;
    first.stop_time = 0.1;
    run_scenario(parse_scenario(kSmall), first);
    std::string other = kSmall;
    other.replace(other.find("cohesion: 20.0e3"), 16, "cohesion: 25.0e3");
    RunOptions second;
    second.output_dir = first.output_dir;
    second.restart = first.output_dir / "checkpoint.bin";
    EXPECT_THROW(run_scenario(parse_scenario(other), second), ConfigError);
}

TEST(Cli, InvalidArgumentsExitTwo) {
    const std::string cli = PPM_CLI;
    const auto status = [&](const std::string& args) {
        const int raw = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("--bogus"), 2);
    EXPECT_EQ(status("run"), 2);
    EXPECT_EQ(status("run /nonexistent.yaml"), 2);
    EXPECT_EQ(status("run " + (scenario_dir() / "biaxial.yaml").string() + " --threads 0"), 2);
    EXPECT_EQ(status("--help"), 0);
}

TEST(Cli, BadScenarioExitsNonZeroWithSummary) {
    const fs::path dir = scratch("cli_bad");
    std::ofstream(dir / "bad.yaml") << "name: x\n";
    const std::string cmd = std::string(PPM_CLI) + " run " + (dir / "bad.yaml").string() + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::string out;
    char buf[256];
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    const int raw = pclose(pipe);
    EXPECT_NE(WEXITSTATUS(raw), 0);
    EXPECT_NE(out.find("geometry missing"), std::string::npos) << out;
}

TEST(Run, ThreadCountDoesNotChangeResults) {
    const Scenario sc = parse_scenario(kSmall);
    RunOptions one;
    one.output_dir = scratch("threads_1");
    one.threads = 1;
    run_scenario(sc, one);
    RunOptions many;
    many.output_dir = scratch("threads_3");
    many.threads = 3;
    run_scenario(sc, many);
    set_thread_count(default_thread_count() > 0 ? default_thread_count() : 1);
    for (const char* f : {"manifest.csv", "loading_curve.csv", "snapshots/snapshot_000004.vtk"})
        EXPECT_EQ(slurp(one.output_dir / f), slurp(many.output_dir / f)) << f;
}
