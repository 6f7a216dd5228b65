#include "ppm/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ppm {

namespace fs = std::filesystem;

Snapshot RunData::snapshot(std::size_t k) const { return read_vtk(directory / manifest.at(k).file); }

RunData load_run(const fs::path& directory) {
    RunData run;
    run.directory = directory;
    run.scenario = load_scenario(directory / "scenario.yaml");
    const auto& sc = run.scenario;
    run.reference = build_grid(sc.geometry->region, sc.discretization.spacing, sc.geometry->eroded);
    if (fs::exists(directory / "manifest.csv")) run.manifest = read_manifest(directory / "manifest.csv");
    if (fs::exists(directory / "loading_curve.csv")) run.curve = read_loading_curve(directory / "loading_curve.csv");
    return run;
}

std::vector<LineFeature> find_bands(const RunData& run, const Snapshot& snap, const BandOptions& opt,
                                    std::optional<double> absolute_threshold) {
    const auto& eps = snap.field("eps_ps");
    const double peak = eps.empty() ? 0.0 : *std::max_element(eps.begin(), eps.end());
    if (peak < opt.min_peak) return {};
    std::vector<double> w;
    if (absolute_threshold) {
        w.assign(eps.size(), 0.0);
        for (std::size_t i = 0; i < eps.size(); ++i)
            if (eps[i] >= *absolute_threshold) w[i] = eps[i];
    } else {
        w = threshold_field(eps, opt.threshold_fraction);
    }
    LineSearchOptions lo;
    lo.spacing = run.scenario.discretization.spacing;
    lo.min_length = 6.0 * lo.spacing;
    return detect_line_features(run.reference.positions, w, lo);
}

namespace {

std::vector<std::uint8_t> mask_of(const RunData& run, std::span<const LineFeature> bands, const BandOptions& opt) {
    return band_mask(run.reference.positions, bands, opt.mask_halfwidth * run.scenario.discretization.spacing);
}

double driver_displacement(const Scenario& sc, double t) {
    if (!sc.output.reaction) return 0.0;
    for (const auto& bc : sc.conditions)
        if (bc.name == *sc.output.reaction) return std::abs(bc.schedule.value(t));
    return 0.0;
}

}  // namespace

BiaxialReport analyze_biaxial(const RunData& run, double w2_displacement, const BandOptions& opt) {
    BiaxialReport r;
    if (!run.curve.empty()) {
        r.peak = peak_index(run.curve);
        const auto& p = run.curve[*r.peak];
        r.peak_displacement = p.displacement;
        r.peak_reaction = p.reaction;
        r.final_reaction = run.curve.back().reaction;
        r.rises = *r.peak > 0 && p.reaction > run.curve.front().reaction;
        r.softens = *r.peak + 1 < run.curve.size() && r.final_reaction <= 0.95 * r.peak_reaction;
    }
    if (run.manifest.empty()) return r;

    const Snapshot last = run.snapshot(run.manifest.size() - 1);
    r.bands = find_bands(run, last, opt);
    r.conjugate = has_conjugate_pair(r.bands);
    const auto mask = mask_of(run, r.bands, opt);
    if (last.has_field("eps_pv")) {
        const auto& pv = last.field("eps_pv");
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            sum += pv[i];
            ++count;
        }
        r.eps_pv_in_bands = count ? sum / static_cast<double>(count) : 0.0;
    }

    // Snapshot closest to the requested driver displacement.
    double best = 1e300;
    for (std::size_t k = 0; k < run.manifest.size(); ++k) {
        const double d = driver_displacement(run.scenario, run.manifest[k].time);
        if (std::abs(d - w2_displacement) < best) {
            best = std::abs(d - w2_displacement);
            r.w2_snapshot = k;
            r.w2_displacement = d;
        }
    }
    const Snapshot snap = run.snapshot(r.w2_snapshot);
    if (snap.has_field("w2")) {
        const auto& w2 = snap.field("w2");
        const auto bands = find_bands(run, snap, opt);
        const auto m = mask_of(run, bands, opt);
        double scale = 0.0;
        for (const double v : w2) scale = std::max(scale, std::abs(v));
        const double thr = opt.w2_noise * scale;
        r.w2_overlap = negative_work_overlap(w2, m, thr);
        r.w2_negative = static_cast<std::size_t>(std::count_if(w2.begin(), w2.end(), [&](double v) { return v < -thr; }));
    }
    return r;
}

void write_biaxial_report(std::ostream& os, const BiaxialReport& r) {
    os << fmt::format("loading curve: peak reaction {:.6e} N/m at u = {:.4f} m; final {:.6e} N/m; rises {}; softens {}\n",
                      r.peak_reaction, r.peak_displacement, r.final_reaction, r.rises, r.softens);
    os << fmt::format("bands in final eps_ps: {} (conjugate pair: {})\n", r.bands.size(), r.conjugate);
    for (const auto& b : r.bands)
        os << fmt::format("  angle {:7.2f} deg  through ({:.2f}, {:.2f})  length {:.2f} m  residual {:.3f} m  points {}\n",
                          b.angle_deg(), b.point.x(), b.point.y(), b.length, b.residual, b.count);
    os << fmt::format("mean eps_pv inside bands: {:.6e}\n", r.eps_pv_in_bands);
    os << fmt::format("negative W2 at u = {:.4f} m (snapshot {}): {} points, fraction inside bands {:.3f}\n",
                      r.w2_displacement, r.w2_snapshot, r.w2_negative, r.w2_overlap);
}

SlopeReport analyze_slope(const RunData& run, const SlopeOptions& opt, const BandOptions& bopt) {
    SlopeReport r;
    const double dx = run.scenario.discretization.spacing;
    r.initial = read_ground_profile(run.directory / "ground_profile_initial.csv");
    const fs::path final_path = run.directory / "ground_profile.csv";
    if (fs::exists(final_path)) {
        r.final_profile = read_ground_profile(final_path);
    } else if (!run.manifest.empty()) {
        const Snapshot last = run.snapshot(run.manifest.size() - 1);
        const double bin = r.initial.size() > 1 ? r.initial[1].x - r.initial[0].x : dx;
        r.final_profile = ground_profile(last.positions, bin, r.initial.front().x - 0.5 * bin,
                                         r.initial.back().x + 0.5 * bin);
    }

    double top = -1e300;
    for (const auto& b : r.initial)
        if (b.valid) top = std::max(top, b.height);
    for (const auto& b : r.initial) {
        if (!b.valid) continue;
        if (b.height >= top - 0.5 * dx) r.crest_x = b.x;
    }
    r.toe_x = -1e300;
    for (const auto& p : run.reference.positions) r.toe_x = std::max(r.toe_x, p.x() + 0.5 * dx);

    r.back_scarp = back_scarp(r.initial, r.final_profile, opt.scarp_drop);
    if (r.back_scarp) r.retrogression = r.crest_x - *r.back_scarp;
    double x_end = r.toe_x;
    for (const auto& b : r.final_profile)
        if (b.valid) x_end = std::max(x_end, b.x);
    const double x_from = r.back_scarp.value_or(r.crest_x) - 2.0 * dx;
    r.oscillations = count_oscillations(r.final_profile, opt.prominence, x_from, x_end);

    // Band nucleation order.
    for (std::size_t k = 0; k < run.manifest.size(); ++k) {
        const Snapshot snap = run.snapshot(k);
        const auto bands = find_bands(run, snap, bopt, opt.eps_threshold);
        for (const auto& b : bands) {
            const Vec2 lo = b.point + b.t_min * b.direction;
            const Vec2 hi = b.point + b.t_max * b.direction;
            const double root = lo.y() < hi.y() ? lo.x() : hi.x();
            const bool known = std::any_of(r.events.begin(), r.events.end(), [&](const BandEvent& e) {
                return std::abs(e.root_x - root) < opt.same_band_distance * dx;
            });
            if (known) continue;
            r.events.push_back({snap.time, b, root, r.toe_x - root});
        }
        if (k + 1 == run.manifest.size()) r.final_bands = bands;
    }
    r.retrogressive = r.events.size() >= 3;
    for (std::size_t k = 1; k < r.events.size(); ++k)
        if (!(r.events[k].upslope > r.events[k - 1].upslope)) r.retrogressive = false;

    if (!r.final_bands.empty()) {
        std::vector<double> angles;
        for (const auto& b : r.final_bands) angles.push_back(std::abs(b.angle_deg()));
        std::sort(angles.begin(), angles.end());
        const std::size_t m = angles.size();
        r.horst_angle = m % 2 ? angles[m / 2] : 0.5 * (angles[m / 2 - 1] + angles[m / 2]);
    }
    return r;
}

void write_slope_report(std::ostream& os, const SlopeReport& r) {
    os << fmt::format("crest x = {:.2f} m, toe x = {:.2f} m\n", r.crest_x, r.toe_x);
    if (r.back_scarp)
        os << fmt::format("back scarp x = {:.2f} m, retrogression distance {:.2f} m\n", *r.back_scarp, r.retrogression);
    else
        os << "no back scarp (surface unchanged)\n";
    os << fmt::format("horst/graben oscillations in final profile: {}\n", r.oscillations);
    os << fmt::format("band nucleation events: {} (retrogressive: {})\n", r.events.size(), r.retrogressive);
    for (const auto& e : r.events)
        os << fmt::format("  t = {:8.3f} s  root x = {:8.2f} m  upslope {:8.2f} m  angle {:7.2f} deg\n", e.time,
                          e.root_x, e.upslope, e.band.angle_deg());
    if (r.horst_angle)
        os << fmt::format("horst bounding band angle (median of {} final bands): {:.2f} deg\n", r.final_bands.size(),
                          *r.horst_angle);
    else
        os << "no bands in the final state\n";
}

}  // namespace ppm
