#pragma once

#include "ppm/output.hpp"
#include "ppm/scenario.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace ppm {

/// Environment variable holding the default worker thread count.
inline constexpr const char* kThreadsEnv = "PPM_NUM_THREADS";

/// Thread count from PPM_NUM_THREADS, or 0 (library default) when unset.
int default_thread_count();
/// Sets the worker count for the parallel passes; returns the count in effect
/// (always 1 in builds without OpenMP).
int set_thread_count(int threads);

struct RunOptions {
    std::filesystem::path output_dir;           // empty selects scenario.output.directory
    int threads = 0;                            // 0 keeps the current setting
    std::optional<double> checkpoint_every;     // overrides the scenario cadence (s)
    std::optional<std::filesystem::path> restart;
    std::optional<double> stop_time;            // end early (tests, staged runs)
    std::function<void(const std::string&)> progress;
};

struct RunResult {
    std::filesystem::path directory;
    long steps = 0;
    long relaxation_steps = 0;
    std::size_t snapshots = 0;
    double wall_seconds = 0.0;
    std::vector<LoadPoint> curve;
};

/// Per-point snapshot fields: displacement magnitude since the end of
/// initialization, accumulated plastic strains, W2 over the last window, and
/// the Kirchhoff mean stress and q.
Snapshot make_snapshot(const ModelSetup& setup, const Simulation::State& state, std::span<const double> w2,
                       std::span<const SnapshotField> fields);

/// Run a scenario and write its outputs (see README for the directory layout).
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace ppm
