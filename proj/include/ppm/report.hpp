#pragma once

#include "ppm/output.hpp"
#include "ppm/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace ppm {

/// A finished (or partial) run directory.
struct RunData {
    std::filesystem::path directory;
    Scenario scenario;
    PointSet reference;  // reference lattice rebuilt from the scenario
    std::vector<ManifestEntry> manifest;
    std::vector<LoadPoint> curve;

    Snapshot snapshot(std::size_t k) const;
};

RunData load_run(const std::filesystem::path& directory);

/// Band analysis options shared by both scenarios.
struct BandOptions {
    double threshold_fraction = 0.5;  // eps_ps weight threshold relative to the field maximum
    double min_peak = 0.01;            // no bands below this eps_ps maximum
    double mask_halfwidth = 2.0;       // band mask half-width in lattice spacings
    double w2_noise = 1e-6;            // negative W2 counts below -w2_noise * max|W2|
};

/// Linear eps_ps bands of a snapshot, located in the reference configuration.
std::vector<LineFeature> find_bands(const RunData& run, const Snapshot& snap, const BandOptions& options = {},
                                    std::optional<double> absolute_threshold = std::nullopt);

struct BiaxialReport {
    std::optional<std::size_t> peak;
    double peak_displacement = 0.0;
    double peak_reaction = 0.0;
    double final_reaction = 0.0;
    bool rises = false;    // reaction grows up to the peak
    bool softens = false;  // drops by at least 5% of the peak afterwards
    std::vector<LineFeature> bands;
    bool conjugate = false;
    double eps_pv_in_bands = 0.0;  // mean plastic volumetric strain inside the band mask
    std::size_t w2_snapshot = 0;
    double w2_displacement = 0.0;
    double w2_overlap = 0.0;
    std::size_t w2_negative = 0;
};

BiaxialReport analyze_biaxial(const RunData& run, double w2_displacement = 0.25, const BandOptions& options = {});
void write_biaxial_report(std::ostream& os, const BiaxialReport& report);

struct BandEvent {
    double time = 0.0;
    LineFeature band;
    double root_x = 0.0;         // x of the lower end of the band
    double upslope = 0.0;        // distance of the root from the reference toe
};

struct SlopeReport {
    std::vector<ProfileBin> initial;
    std::vector<ProfileBin> final_profile;
    double crest_x = 0.0;
    double toe_x = 0.0;
    std::optional<double> back_scarp;
    double retrogression = 0.0;  // crest to back scarp, positive when the scarp lies behind the crest
    std::size_t oscillations = 0;
    std::vector<BandEvent> events;  // band nucleation in order of appearance
    bool retrogressive = false;     // >= 3 events with strictly increasing upslope root distance
    std::vector<LineFeature> final_bands;
    std::optional<double> horst_angle;
};

struct SlopeOptions {
    double scarp_drop = 0.5;          // surface drop marking the back scarp (m)
    double prominence = 0.5;          // horst/graben prominence (m)
    double eps_threshold = 0.05;      // eps_ps level that marks a band for nucleation tracking
    double same_band_distance = 4.0;  // roots closer than this many spacings belong to one band
};

SlopeReport analyze_slope(const RunData& run, const SlopeOptions& options = {}, const BandOptions& bands = {});
void write_slope_report(std::ostream& os, const SlopeReport& report);

}  // namespace ppm
