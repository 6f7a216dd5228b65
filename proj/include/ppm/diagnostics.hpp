#pragma once

#include "ppm/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ppm {

struct PlasticIncrement {
    double eps_ps = 0.0;
    double eps_pv = 0.0;
};

/// eps_ps += dgamma sqrt(2/3) |dev n|,  eps_pv += dgamma tr n  (n = plastic flow
/// direction; positive eps_pv is dilation).
PlasticIncrement accumulate_plastic_strains(double dgamma, const Mat3& flow);

/// Pointwise second-order work over a window: W2 = (P_{n+1} - P_n) : (F_{n+1} - F_n).
std::vector<double> second_order_work(std::span<const Mat3> piola_n, std::span<const Mat3> piola_np1,
                                      std::span<const Mat3> F_n, std::span<const Mat3> F_np1);

/// Sum of internal force density x volume over the driven points, projected on
/// -drive so that a compressive reaction is positive.
double reaction_force(std::span<const Vec2> internal_force, std::span<const double> volumes,
                      std::span<const std::size_t> driven, const Vec2& drive_direction);

struct LoadPoint {
    double time = 0.0;
    double displacement = 0.0;
    double reaction = 0.0;
};

void write_loading_curve(std::ostream& os, std::span<const LoadPoint> curve);

/// Index of the peak reaction; nullopt for an empty curve.
std::optional<std::size_t> peak_index(std::span<const LoadPoint> curve);

struct ProfileBin {
    double x = 0.0;       // bin centre
    double height = 0.0;  // maximum y of the points in the bin
    bool valid = false;   // false marks a gap (empty bin)
};

/// Surface profile: maximum y over points in horizontal bins of width `bin`,
/// starting at `x_min`.
std::vector<ProfileBin> ground_profile(std::span<const Vec2> positions, double bin, double x_min, double x_max);

void write_ground_profile(std::ostream& os, std::span<const ProfileBin> profile);

/// Number of local maxima with prominence at least `prominence` among the
/// valid bins between `x_from` and `x_to`.
std::size_t count_oscillations(std::span<const ProfileBin> profile, double prominence, double x_from, double x_to);

/// Smallest x at which the surface dropped by more than `drop` relative to
/// `initial` (bins must match), or nullopt when nothing moved.
std::optional<double> back_scarp(std::span<const ProfileBin> initial, std::span<const ProfileBin> final_profile,
                                 double drop);

/// A straight band feature of a scalar field over scattered points.
struct LineFeature {
    Vec2 point = Vec2::Zero();      // a point on the line (support centroid)
    Vec2 direction = Vec2::UnitX();  // unit direction with direction.x() >= 0
    double support = 0.0;            // summed weight of supporting points
    std::size_t count = 0;           // number of supporting points
    double residual = 0.0;           // RMS distance of supporting points to the line
    double length = 0.0;             // extent of the supporting points along the line
    double t_min = 0.0;              // support extent along `direction`, relative to `point`
    double t_max = 0.0;

    /// Angle from horizontal in degrees, in [-90, 90].
    double angle_deg() const;
    /// x at which the line crosses height y.
    double x_at(double y) const;
};

struct LineSearchOptions {
    double spacing = 1.0;           // lattice spacing (bins and band half-width)
    double band_halfwidth = 1.5;    // in multiples of spacing
    double angle_step_deg = 1.0;
    double min_inclination_deg = 15.0;
    double max_inclination_deg = 80.0;
    double min_length = 0.0;        // minimum extent of a feature (m)
    std::size_t min_count = 6;
    std::size_t max_features = 12;
    double suppress_angle_deg = 12.0;
    double suppress_offset = 3.0;   // in multiples of spacing
};

/// Weighted Hough search for inclined linear features among the points with
/// positive weight, refined by total least squares.
std::vector<LineFeature> detect_line_features(std::span<const Vec2> positions, std::span<const double> weights,
                                              const LineSearchOptions& options);

/// Mask of points within `halfwidth` of any feature line.
std::vector<std::uint8_t> band_mask(std::span<const Vec2> positions, std::span<const LineFeature> features,
                                    double halfwidth);

/// Conjugate pattern: at least two features whose slopes have opposite signs.
bool has_conjugate_pair(std::span<const LineFeature> features);

/// Fraction of points with W2 < -threshold that lie inside `mask`.
double negative_work_overlap(std::span<const double> w2, std::span<const std::uint8_t> mask, double threshold);

/// Weights for feature search: field value where it exceeds `fraction` of its
/// maximum, zero elsewhere.
std::vector<double> threshold_field(std::span<const double> field, double fraction);

}  // namespace ppm
