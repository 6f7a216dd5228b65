#pragma once

#include "ppm/diagnostics.hpp"
#include "ppm/dynamics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ppm {

/// Point cloud with named scalar fields at one output time.
struct Snapshot {
    double time = 0.0;
    long step = 0;
    std::vector<Vec2> positions;
    std::vector<std::pair<std::string, std::vector<double>>> fields;

    const std::vector<double>& field(const std::string& name) const;
    bool has_field(const std::string& name) const;
};

/// Legacy ASCII VTK POLYDATA with one vertex cell per point and fixed
/// 9-digit scientific formatting.
void write_vtk(std::ostream& os, const Snapshot& snapshot);
void write_vtk(const std::filesystem::path& path, const Snapshot& snapshot);
/// Reads files produced by write_vtk.
Snapshot read_vtk(const std::filesystem::path& path);

struct ManifestEntry {
    long index = 0;
    long step = 0;
    double time = 0.0;
    std::string file;  // relative to the run directory
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

std::vector<LoadPoint> read_loading_curve(const std::filesystem::path& path);
std::vector<ProfileBin> read_ground_profile(const std::filesystem::path& path);

/// Everything needed to resume a run bit-exactly.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::uint64_t scenario_hash = 0;
    Simulation::State state;
    long relaxation_steps = 0;
    std::vector<Mat3> window_piola;  // W2 reference state at the previous snapshot
    std::vector<Mat3> window_F;
    std::vector<ManifestEntry> manifest;
    std::vector<LoadPoint> curve;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Stable FNV-1a hash, used to tie checkpoints to their scenario text.
std::uint64_t fnv1a(const std::string& text);

/// Write a file atomically enough for our purposes and fail loudly on I/O errors.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ppm
