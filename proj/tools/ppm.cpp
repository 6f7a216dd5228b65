// Command-line driver: run scenarios, verify the numerical kernels, report on run directories.

#include "verify.hpp"

#include "ppm/report.hpp"
#include "ppm/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

/// Machine-readable one-line error summary on stderr.
int fail(const char* kind, const std::string& message, int code = 1) {
    std::string flat = message;
    for (auto& c : flat)
        if (c == '\n') c = ' ';
    std::cerr << fmt::format("error: kind={} message=\"{}\"\n", kind, flat);
    return code;
}

int cmd_run(const std::string& scenario_path, const std::string& output, int threads, double checkpoint_every,
            const std::string& restart, bool quiet) {
    const ppm::Scenario sc = ppm::load_scenario(scenario_path);
    ppm::RunOptions opt;
    opt.output_dir = output;
    opt.threads = threads > 0 ? threads : ppm::default_thread_count();
    if (checkpoint_every > 0.0) opt.checkpoint_every = checkpoint_every;
    if (!restart.empty()) opt.restart = restart;
    if (!quiet) opt.progress = [](const std::string& msg) { std::cout << msg << std::endl; };
    const auto res = ppm::run_scenario(sc, opt);
    std::cout << fmt::format("done: {} steps, {} snapshots, {:.1f} s wall, output in {}\n", res.steps, res.snapshots,
                             res.wall_seconds, res.directory.string());
    return 0;
}

int cmd_verify() {
    std::vector<ppm::verify::SuiteResult> results;
    for (const auto& suite : ppm::verify::all_suites()) results.push_back(suite());
    ppm::verify::print_table(std::cout, results);
    for (const auto& r : results)
        if (!r.passed()) return 1;
    return 0;
}

int cmd_report(const std::string& dir) {
    const ppm::RunData run = ppm::load_run(dir);
    std::ostringstream ss;
    ss << fmt::format("run: {} ({} snapshots)\n", run.scenario.name, run.manifest.size());
    if (!run.curve.empty()) {
        ppm::write_biaxial_report(ss, ppm::analyze_biaxial(run));
    }
    if (run.scenario.base && fs::exists(fs::path(dir) / "ground_profile_initial.csv")) {
        const auto slope = ppm::analyze_slope(run);
        ppm::write_slope_report(ss, slope);
        if (!fs::exists(fs::path(dir) / "ground_profile.csv")) {
            std::ostringstream prof;
            ppm::write_ground_profile(prof, slope.final_profile);
            ppm::write_text(fs::path(dir) / "ground_profile.csv", prof.str());
        }
    }
    ppm::write_text(fs::path(dir) / "report.txt", ss.str());
    std::cout << ss.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-deformation peridynamic Drucker-Prager simulator"};
    app.require_subcommand(1);

    std::string scenario, output, restart, run_dir;
    int threads = 0;
    double checkpoint_every = 0.0;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("scenario", scenario, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
    run->add_option("--output,-o", output, "Output directory (default: from the scenario)");
    run->add_option("--threads,-j", threads, "Worker threads (default: $PPM_NUM_THREADS)")->check(CLI::PositiveNumber);
    run->add_option("--checkpoint-every", checkpoint_every, "Checkpoint cadence in simulated seconds")
        ->check(CLI::PositiveNumber);
    run->add_option("--restart", restart, "Resume from a checkpoint file")->check(CLI::ExistingFile);
    run->add_flag("--quiet,-q", quiet, "Suppress progress output");

    auto* verify = app.add_subcommand("verify", "Run the kinematics/plasticity/integrator property suites");
    auto* report = app.add_subcommand("report", "Summarize a run directory");
    report->add_option("run_dir", run_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(scenario, output, threads, checkpoint_every, restart, quiet);
        if (*verify) return cmd_verify();
        if (*report) return cmd_report(run_dir);
    } catch (const ppm::ScenarioError& e) {
        for (const auto& line : e.errors()) std::cerr << line << "\n";
        return fail("config", e.what());
    } catch (const ppm::ConfigError& e) {
        return fail("config", e.what());
    } catch (const ppm::NumericalError& e) {
        return fail("numerical", e.what());
    } catch (const std::exception& e) {
        return fail("io", e.what());
    }
    return 0;
}
