#include "ppm/diagnostics.hpp"

#include "ppm/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace ppm {

PlasticIncrement accumulate_plastic_strains(double dgamma, const Mat3& flow) {
    PlasticIncrement inc;
    if (dgamma <= 0.0) return inc;
    const double tr = flow.trace();
    const Mat3 dev = flow - (tr / 3.0) * Mat3::Identity();
    inc.eps_ps = dgamma * std::sqrt(2.0 / 3.0) * dev.norm();
    inc.eps_pv = dgamma * tr;
    return inc;
}

std::vector<double> second_order_work(std::span<const Mat3> piola_n, std::span<const Mat3> piola_np1,
                                      std::span<const Mat3> F_n, std::span<const Mat3> F_np1) {
    const std::size_t n = piola_n.size();
    if (piola_np1.size() != n || F_n.size() != n || F_np1.size() != n)
        throw ConfigError("second-order work needs matching snapshot arrays");
    std::vector<double> w2(n);
    for (std::size_t i = 0; i < n; ++i) w2[i] = ddot(Mat3(piola_np1[i] - piola_n[i]), Mat3(F_np1[i] - F_n[i]));
    return w2;
}

double reaction_force(std::span<const Vec2> internal_force, std::span<const double> volumes,
                      std::span<const std::size_t> driven, const Vec2& drive_direction) {
    Vec2 sum = Vec2::Zero();
    for (const auto i : driven) sum += internal_force[i] * volumes[i];
    return -sum.dot(drive_direction.normalized());
}

void write_loading_curve(std::ostream& os, std::span<const LoadPoint> curve) {
    os << "time,displacement,reaction\n";
    for (const auto& p : curve) os << fmt::format("{:.6f},{:.9e},{:.9e}\n", p.time, p.displacement, p.reaction);
}

std::optional<std::size_t> peak_index(std::span<const LoadPoint> curve) {
    if (curve.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t k = 1; k < curve.size(); ++k)
        if (curve[k].reaction > curve[best].reaction) best = k;
    return best;
}

std::vector<ProfileBin> ground_profile(std::span<const Vec2> positions, double bin, double x_min, double x_max) {
    if (!(bin > 0.0)) throw ConfigError("profile bin width must be positive");
    const auto nbins = static_cast<std::size_t>(std::max(1.0, std::ceil((x_max - x_min) / bin - 1e-9)));
    std::vector<ProfileBin> prof(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        prof[k].x = x_min + (k + 0.5) * bin;
        prof[k].height = std::numeric_limits<double>::lowest();
    }
    for (const auto& p : positions) {
        const double f = (p.x() - x_min) / bin;
        if (f < 0.0 || f >= static_cast<double>(nbins)) continue;
        auto& b = prof[static_cast<std::size_t>(f)];
        b.height = std::max(b.height, p.y());
        b.valid = true;
    }
    for (auto& b : prof)
        if (!b.valid) b.height = 0.0;
    return prof;
}

void write_ground_profile(std::ostream& os, std::span<const ProfileBin> profile) {
    os << "x,height\n";
    for (const auto& b : profile) {
        if (b.valid)
            os << fmt::format("{:.6f},{:.6f}\n", b.x, b.height);
        else
            os << fmt::format("{:.6f},nan\n", b.x);
    }
}

std::size_t count_oscillations(std::span<const ProfileBin> profile, double prominence, double x_from, double x_to) {
    std::vector<double> h;
    for (const auto& b : profile)
        if (b.valid && b.x >= x_from && b.x <= x_to) h.push_back(b.height);
    std::size_t peaks = 0;
    const std::size_t n = h.size();
    for (std::size_t i = 0; i < n; ++i) {
        // Plateau-aware local maximum: strictly higher than the first differing
        // neighbour on each side, counted once at the plateau's left end.
        if (i > 0 && h[i - 1] == h[i]) continue;
        std::size_t r = i;
        while (r + 1 < n && h[r + 1] == h[i]) ++r;
        const bool left_ok = i == 0 || h[i - 1] < h[i];
        const bool right_ok = r + 1 == n || h[r + 1] < h[i];
        if (!left_ok || !right_ok || i == 0 || r + 1 == n) continue;
        double left_min = h[i];
        for (std::size_t k = i; k-- > 0;) {
            if (h[k] > h[i]) break;
            left_min = std::min(left_min, h[k]);
        }
        double right_min = h[i];
        for (std::size_t k = r + 1; k < n; ++k) {
            if (h[k] > h[i]) break;
            right_min = std::min(right_min, h[k]);
        }
        if (h[i] - std::max(left_min, right_min) >= prominence) ++peaks;
    }
    return peaks;
}

std::optional<double> back_scarp(std::span<const ProfileBin> initial, std::span<const ProfileBin> final_profile,
                                 double drop) {
    const std::size_t n = std::min(initial.size(), final_profile.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (!initial[k].valid) continue;
        const double h_final = final_profile[k].valid ? final_profile[k].height : 0.0;
        if (initial[k].height - h_final > drop) return initial[k].x;
    }
    return std::nullopt;
}

double LineFeature::angle_deg() const {
    return std::atan2(direction.y(), direction.x()) * 180.0 / std::numbers::pi;
}

double LineFeature::x_at(double y) const {
    if (std::abs(direction.y()) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
    return point.x() + (y - point.y()) * direction.x() / direction.y();
}

namespace {

struct Fit {
    LineFeature line;
    std::vector<std::size_t> members;
};

Fit refine(std::span<const Vec2> pos, std::span<const double> w, const std::vector<std::size_t>& active,
           const Vec2& p0, const Vec2& d0, double halfwidth) {
    Fit fit;
    Vec2 point = p0;
    Vec2 dir = d0;
    for (int pass = 0; pass < 3; ++pass) {
        const Vec2 nrm(-dir.y(), dir.x());
        std::vector<std::size_t> members;
        double wsum = 0.0;
        Vec2 centroid = Vec2::Zero();
        for (const auto i : active) {
            if (std::abs((pos[i] - point).dot(nrm)) > halfwidth) continue;
            members.push_back(i);
            wsum += w[i];
            centroid += w[i] * pos[i];
        }
        if (members.size() < 2 || wsum <= 0.0) {
            fit.members = std::move(members);
            break;
        }
        centroid /= wsum;
        Mat2 cov = Mat2::Zero();
        for (const auto i : members) {
            const Vec2 r = pos[i] - centroid;
            cov += w[i] * r * r.transpose();
        }
        Vec2 vals;
        Mat2 vecs;
        sym_eigen2(cov, vals, vecs);
        Vec2 major = vecs.col(0);
        // Keep the refined direction close to the seed so crossing bands do not swap.
        if (std::abs(major.dot(d0)) < std::cos(20.0 * std::numbers::pi / 180.0)) major = dir;
        point = centroid;
        dir = major.normalized();
        fit.members = std::move(members);
        fit.line.support = wsum;
    }
    if (dir.x() < 0.0 || (dir.x() == 0.0 && dir.y() < 0.0)) dir = -dir;
    fit.line.point = point;
    fit.line.direction = dir;
    fit.line.count = fit.members.size();
    const Vec2 nrm(-dir.y(), dir.x());
    double t_min = std::numeric_limits<double>::max();
    double t_max = std::numeric_limits<double>::lowest();
    double sq = 0.0;
    for (const auto i : fit.members) {
        const Vec2 r = pos[i] - point;
        const double t = r.dot(dir);
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
        sq += r.dot(nrm) * r.dot(nrm);
    }
    if (!fit.members.empty()) {
        fit.line.t_min = t_min;
        fit.line.t_max = t_max;
        fit.line.length = t_max - t_min;
        fit.line.residual = std::sqrt(sq / static_cast<double>(fit.members.size()));
    }
    return fit;
}

}  // namespace

std::vector<LineFeature> detect_line_features(std::span<const Vec2> positions, std::span<const double> weights,
                                              const LineSearchOptions& opt) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < positions.size(); ++i)
        if (weights[i] > 0.0) active.push_back(i);
    std::vector<LineFeature> found;
    if (active.size() < opt.min_count) return found;

    const double deg = std::numbers::pi / 180.0;
    const double halfwidth = opt.band_halfwidth * opt.spacing;
    double r_max = 0.0;
    for (const auto i : active) r_max = std::max(r_max, positions[i].norm());
    const double rho_step = opt.spacing;
    const auto n_rho = static_cast<std::size_t>(std::ceil(2.0 * r_max / rho_step)) + 2;

    // Normal angles theta whose line inclination lies in the admissible range.
    std::vector<double> thetas;
    for (double a = 0.0; a < 180.0; a += opt.angle_step_deg) {
        const double incl = std::abs(a - 90.0);  // line direction is theta + 90
        const double incl_from_h = 90.0 - std::abs(90.0 - std::fmod(a + 90.0, 180.0));
        (void)incl;
        if (incl_from_h >= opt.min_inclination_deg && incl_from_h <= opt.max_inclination_deg) thetas.push_back(a);
    }
    std::vector<double> acc(thetas.size() * n_rho);

    while (found.size() < opt.max_features && active.size() >= opt.min_count) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto i : active) {
            for (std::size_t t = 0; t < thetas.size(); ++t) {
                const double th = thetas[t] * deg;
                const double rho = positions[i].x() * std::cos(th) + positions[i].y() * std::sin(th);
                const auto k = static_cast<std::size_t>((rho + r_max) / rho_step + 0.5);
                // Spread each vote over the band width so parallel rows do not split the peak.
                const auto spread = static_cast<std::size_t>(std::ceil(halfwidth / rho_step));
                for (std::size_t s = (k > spread ? k - spread : 0); s <= std::min(n_rho - 1, k + spread); ++s)
                    acc[t * n_rho + s] += weights[i];
            }
        }
        const auto best = static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
        if (acc[best] <= 0.0) break;
        const double th = thetas[best / n_rho] * deg;
        const double rho = static_cast<double>(best % n_rho) * rho_step - r_max;
        const Vec2 nrm(std::cos(th), std::sin(th));
        const Vec2 dir(-std::sin(th), std::cos(th));
        const Fit fit = refine(positions, weights, active, rho * nrm, dir, halfwidth);
        if (fit.members.size() < opt.min_count || fit.line.length < opt.min_length) break;
        const double incl = std::abs(fit.line.angle_deg());
        if (incl >= opt.min_inclination_deg && incl <= opt.max_inclination_deg) found.push_back(fit.line);
        // Remove the supporting points and search again.
        std::vector<std::size_t> rest;
        std::size_t m = 0;
        for (const auto i : active) {
            while (m < fit.members.size() && fit.members[m] < i) ++m;
            if (m < fit.members.size() && fit.members[m] == i) continue;
            rest.push_back(i);
        }
        if (rest.size() == active.size()) break;
        active = std::move(rest);
    }
    return found;
}

std::vector<std::uint8_t> band_mask(std::span<const Vec2> positions, std::span<const LineFeature> features,
                                    double halfwidth) {
    std::vector<std::uint8_t> mask(positions.size(), 0);
    for (const auto& f : features) {
        const Vec2 nrm(-f.direction.y(), f.direction.x());
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const Vec2 r = positions[i] - f.point;
            const double t = r.dot(f.direction);
            if (std::abs(r.dot(nrm)) <= halfwidth && t >= f.t_min - halfwidth && t <= f.t_max + halfwidth) mask[i] = 1;
        }
    }
    return mask;
}

bool has_conjugate_pair(std::span<const LineFeature> features) {
    bool pos = false;
    bool neg = false;
    for (const auto& f : features) {
        if (f.angle_deg() > 0.0) pos = true;
        if (f.angle_deg() < 0.0) neg = true;
    }
    return pos && neg;
}

double negative_work_overlap(std::span<const double> w2, std::span<const std::uint8_t> mask, double threshold) {
    std::size_t negative = 0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < w2.size(); ++i) {
        if (!(w2[i] < -threshold)) continue;
        ++negative;
        if (mask[i]) ++inside;
    }
    return negative == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(negative);
}

std::vector<double> threshold_field(std::span<const double> field, double fraction) {
    double vmax = 0.0;
    for (const double v : field) vmax = std::max(vmax, v);
    std::vector<double> w(field.size(), 0.0);
    if (vmax <= 0.0) return w;
    for (std::size_t i = 0; i < field.size(); ++i)
        if (field[i] >= fraction * vmax) w[i] = field[i];
    return w;
}

}  // namespace ppm
