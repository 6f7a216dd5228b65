#include "ppm/scenario.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ppm {

namespace {

std::string join(const std::vector<std::string>& lines) {
    std::string out = fmt::format("{} problem(s) in scenario:", lines.size());
    for (const auto& l : lines) out += "\n  " + l;
    return out;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> errors) : ConfigError(join(errors)), errors_(std::move(errors)) {}

ElasticModuli MaterialSpec::moduli() const {
    return moduli_input == ModuliInput::BulkShear ? ElasticModuli::from_bulk_shear(modulus_a, modulus_b)
                                                  : ElasticModuli::from_young_poisson(modulus_a, modulus_b);
}

double MaterialSpec::solid_partial_density() const {
    if (partial_density) return *partial_density;
    return (1.0 - porosity) * intrinsic_density.value_or(0.0);
}

const char* field_name(SnapshotField field) {
    switch (field) {
        case SnapshotField::Displacement: return "displacement";
        case SnapshotField::EpsPs: return "eps_ps";
        case SnapshotField::EpsPv: return "eps_pv";
        case SnapshotField::W2: return "w2";
        case SnapshotField::MeanStress: return "mean_stress";
        case SnapshotField::Q: return "q";
    }
    return "";
}

std::vector<SnapshotField> all_snapshot_fields() {
    return {SnapshotField::Displacement, SnapshotField::EpsPs, SnapshotField::EpsPv,
            SnapshotField::W2,           SnapshotField::MeanStress, SnapshotField::Q};
}

namespace {

/// Walks a YAML tree, recording every problem instead of stopping at the first.
class Reader {
public:
    std::vector<std::string> errors;

    void fail(const YAML::Node& node, const std::string& field, const std::string& msg) {
        if (node && node.Mark().line >= 0)
            errors.push_back(fmt::format("line {}: {}: {}", node.Mark().line + 1, field, msg));
        else
            errors.push_back(fmt::format("{}: {}", field, msg));
    }

    /// Report keys of `map` outside `allowed`.
    void check_keys(const YAML::Node& map, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!map.IsMap()) return;
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                fail(kv.first, path.empty() ? key : path + "." + key, "unknown key");
        }
    }

    std::optional<double> number(const YAML::Node& map, const char* key, const std::string& path) {
        const YAML::Node n = map[key];
        if (!n) return std::nullopt;
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) {
                fail(n, path + "." + key, "must be finite");
                return std::nullopt;
            }
            return v;
        } catch (const YAML::Exception&) {
            fail(n, path + "." + key, "expected a number");
            return std::nullopt;
        }
    }

    double require(const YAML::Node& map, const char* key, const std::string& path) {
        if (!map[key]) {
            fail(map, path + "." + key, "missing");
            return 0.0;
        }
        return number(map, key, path).value_or(0.0);
    }

    double positive(const YAML::Node& map, const char* key, const std::string& path, bool required = true,
                    double fallback = 0.0) {
        if (!map[key] && !required) return fallback;
        const double v = require(map, key, path);
        if (map[key] && !(v > 0.0)) fail(map[key], path + "." + key, fmt::format("must be positive (got {})", v));
        return v;
    }

    std::optional<std::string> text(const YAML::Node& map, const char* key, const std::string& path) {
        const YAML::Node n = map[key];
        if (!n) return std::nullopt;
        if (!n.IsScalar()) {
            fail(n, path + "." + key, "expected a string");
            return std::nullopt;
        }
        return n.as<std::string>();
    }

    std::optional<bool> flag(const YAML::Node& map, const char* key, const std::string& path) {
        const YAML::Node n = map[key];
        if (!n) return std::nullopt;
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, path + "." + key, "expected true or false");
            return std::nullopt;
        }
    }

    std::vector<double> numbers(const YAML::Node& n, const std::string& path, std::size_t count) {
        std::vector<double> out;
        if (!n.IsSequence() || (count && n.size() != count)) {
            fail(n, path, count ? fmt::format("expected a list of {} numbers", count) : "expected a list of numbers");
            return out;
        }
        for (const auto& e : n) {
            try {
                out.push_back(e.as<double>());
            } catch (const YAML::Exception&) {
                fail(e, path, "expected a number");
                return {};
            }
        }
        return out;
    }

    std::optional<Vec2> vec2(const YAML::Node& n, const std::string& path) {
        const auto v = numbers(n, path, 2);
        if (v.size() != 2) return std::nullopt;
        return Vec2(v[0], v[1]);
    }

    std::optional<Polygon> polygon(const YAML::Node& n, const std::string& path) {
        if (!n.IsSequence() || n.size() < 3) {
            fail(n, path, "a polygon needs at least three [x, y] vertices");
            return std::nullopt;
        }
        Polygon p;
        for (const auto& v : n) {
            const auto xy = vec2(v, path);
            if (!xy) return std::nullopt;
            p.vertices.push_back(*xy);
        }
        return p;
    }

    std::optional<Schedule> schedule(const YAML::Node& map, const std::string& path) {
        const YAML::Node s = map["schedule"];
        const YAML::Node v = map["value"];
        if (s && v) {
            fail(s, path, "give either 'schedule' or 'value', not both");
            return std::nullopt;
        }
        if (v) {
            const auto c = number(map, "value", path);
            if (!c) return std::nullopt;
            return Schedule(*c);
        }
        if (!s) return std::nullopt;
        if (!s.IsSequence() || s.size() == 0) {
            fail(s, path + ".schedule", "expected a list of [time, value] pairs");
            return std::nullopt;
        }
        std::vector<std::pair<double, double>> pts;
        for (const auto& e : s) {
            const auto tv = vec2(e, path + ".schedule");
            if (!tv) return std::nullopt;
            pts.emplace_back(tv->x(), tv->y());
        }
        try {
            return Schedule(std::move(pts));
        } catch (const ConfigError& e) {
            fail(s, path + ".schedule", e.what());
            return std::nullopt;
        }
    }
};

const std::map<std::string, std::uint8_t> kFaceNames{
    {"left", kFaceXMinus}, {"right", kFaceXPlus}, {"bottom", kFaceYMinus}, {"top", kFaceYPlus}};

std::string face_label(std::uint8_t face) {
    for (const auto& [name, bit] : kFaceNames)
        if (bit == face) return name;
    return "?";
}

void read_geometry(Reader& r, const YAML::Node& g, Scenario& sc) {
    if (!g) {
        r.errors.emplace_back("geometry missing");
        return;
    }
    r.check_keys(g, "geometry", {"rectangle", "polygon", "eroded"});
    const bool has_rect = static_cast<bool>(g["rectangle"]);
    const bool has_poly = static_cast<bool>(g["polygon"]);
    if (has_rect == has_poly) {
        r.fail(g, "geometry", "exactly one of 'rectangle' or 'polygon' is required");
        return;
    }
    GeometrySpec spec;
    if (has_rect) {
        const auto v = r.numbers(g["rectangle"], "geometry.rectangle", 4);
        if (v.size() != 4) return;
        if (!(v[2] > v[0] && v[3] > v[1])) {
            r.fail(g["rectangle"], "geometry.rectangle", "expected [x_min, y_min, x_max, y_max] with positive extent");
            return;
        }
        spec.region = Rectangle{v[0], v[1], v[2], v[3]};
    } else {
        const auto p = r.polygon(g["polygon"], "geometry.polygon");
        if (!p) return;
        spec.region = *p;
    }
    if (const YAML::Node e = g["eroded"]) {
        if (!e.IsSequence()) {
            r.fail(e, "geometry.eroded", "expected a list of polygons");
        } else {
            for (const auto& poly : e)
                if (const auto p = r.polygon(poly, "geometry.eroded")) spec.eroded.push_back(*p);
        }
    }
    sc.geometry = std::move(spec);
}

void read_material(Reader& r, const YAML::Node& m, Scenario& sc) {
    if (!m) {
        r.errors.emplace_back("material missing");
        return;
    }
    const std::string p = "material";
    r.check_keys(m, p,
                 {"intrinsic_density", "partial_density", "porosity", "bulk_modulus", "shear_modulus",
                  "young_modulus", "poisson_ratio", "cohesion", "residual_cohesion", "hardening_modulus",
                  "friction_angle", "dilatancy_angle", "cone_fit", "yield"});
    auto& mat = sc.material;
    const bool intrinsic = static_cast<bool>(m["intrinsic_density"]);
    const bool partial = static_cast<bool>(m["partial_density"]);
    if (intrinsic == partial) r.fail(m, p, "give exactly one of 'intrinsic_density' or 'partial_density'");
    if (intrinsic) mat.intrinsic_density = r.positive(m, "intrinsic_density", p);
    if (partial) mat.partial_density = r.positive(m, "partial_density", p);
    mat.porosity = r.number(m, "porosity", p).value_or(0.0);
    if (mat.porosity < 0.0 || mat.porosity >= 1.0) r.fail(m["porosity"], p + ".porosity", "must lie in [0, 1)");

    const bool kg = m["bulk_modulus"] || m["shear_modulus"];
    const bool enu = m["young_modulus"] || m["poisson_ratio"];
    if (kg == enu) {
        r.fail(m, p, "moduli must be given as exactly one of (bulk_modulus, shear_modulus) or (young_modulus, poisson_ratio)");
    } else if (kg) {
        mat.moduli_input = ModuliInput::BulkShear;
        mat.modulus_a = r.positive(m, "bulk_modulus", p);
        mat.modulus_b = r.positive(m, "shear_modulus", p);
    } else {
        mat.moduli_input = ModuliInput::YoungPoisson;
        mat.modulus_a = r.positive(m, "young_modulus", p);
        mat.modulus_b = r.require(m, "poisson_ratio", p);
        if (m["poisson_ratio"] && !(mat.modulus_b > -1.0 && mat.modulus_b < 0.5))
            r.fail(m["poisson_ratio"], p + ".poisson_ratio", "must lie in (-1, 0.5)");
    }

    auto& dp = mat.plasticity;
    dp.c0 = r.positive(m, "cohesion", p);
    dp.c_residual = r.number(m, "residual_cohesion", p).value_or(dp.c0);
    dp.h = r.number(m, "hardening_modulus", p).value_or(0.0);
    dp.friction_deg = r.require(m, "friction_angle", p);
    dp.dilatancy_deg = r.number(m, "dilatancy_angle", p).value_or(0.0);
    if (const auto fit = r.text(m, "cone_fit", p)) {
        if (*fit == "compression")
            dp.fit = ConeFit::Compression;
        else if (*fit == "plane_strain")
            dp.fit = ConeFit::PlaneStrain;
        else
            r.fail(m["cone_fit"], p + ".cone_fit", "expected 'compression' or 'plane_strain'");
    }
    mat.yield_enabled = r.flag(m, "yield", p).value_or(true);
    if (dp.c0 > 0.0) {
        try {
            dp.validate();
        } catch (const ConfigError& e) {
            r.fail(m, p, e.what());
        }
    }
}

void read_discretization(Reader& r, const YAML::Node& d, Scenario& sc) {
    if (!d) {
        r.errors.emplace_back("discretization missing");
        return;
    }
    const std::string p = "discretization";
    r.check_keys(d, p, {"spacing", "horizon_ratio", "influence", "volume_correction"});
    auto& ds = sc.discretization;
    ds.spacing = r.positive(d, "spacing", p);
    ds.horizon_ratio = r.positive(d, "horizon_ratio", p, false, 3.0);
    if (const auto inf = r.text(d, "influence", p)) {
        if (*inf == "constant")
            ds.influence = InfluenceKind::Constant;
        else if (*inf == "cubic_spline")
            ds.influence = InfluenceKind::CubicSpline;
        else
            r.fail(d["influence"], p + ".influence", "expected 'constant' or 'cubic_spline'");
    }
    ds.volume_correction = r.flag(d, "volume_correction", p).value_or(true);
}

void read_integrator(Reader& r, const YAML::Node& n, Scenario& sc) {
    if (!n) {
        r.errors.emplace_back("integrator missing");
        return;
    }
    const std::string p = "integrator";
    r.check_keys(n, p, {"dt", "end_time", "damping", "stabilization", "newmark_beta", "newmark_gamma"});
    sc.integrator.dt = r.positive(n, "dt", p);
    sc.integrator.end_time = r.positive(n, "end_time", p);
    sc.integrator.beta = r.number(n, "newmark_beta", p).value_or(0.0);
    sc.integrator.gamma = r.number(n, "newmark_gamma", p).value_or(0.5);
    if (sc.integrator.beta != 0.0 || sc.integrator.gamma != 0.5)
        r.fail(n, p, "only the explicit member newmark_beta = 0, newmark_gamma = 0.5 is supported");
    sc.damping = r.number(n, "damping", p).value_or(0.0);
    if (sc.damping < 0.0 || sc.damping >= 1.0) r.fail(n["damping"], p + ".damping", "must lie in [0, 1)");
    sc.stabilization = r.number(n, "stabilization", p).value_or(0.5);
    if (sc.stabilization < 0.0) r.fail(n["stabilization"], p + ".stabilization", "must be non-negative");
}

void read_initial(Reader& r, const YAML::Node& n, Scenario& sc) {
    if (!n) return;
    const std::string p = "initial_stress";
    r.check_keys(n, p, {"kind", "stress", "k0"});
    const auto kind = r.text(n, "kind", p).value_or("none");
    if (kind == "none") {
        sc.initial.kind = InitialStressKind::None;
    } else if (kind == "uniform") {
        sc.initial.kind = InitialStressKind::Uniform;
        if (!n["stress"]) {
            r.fail(n, p + ".stress", "missing [sigma_xx, sigma_yy, sigma_zz, sigma_xy]");
        } else {
            const auto v = r.numbers(n["stress"], p + ".stress", 4);
            if (v.size() == 4) {
                Mat3 s = Mat3::Zero();
                s(0, 0) = v[0];
                s(1, 1) = v[1];
                s(2, 2) = v[2];
                s(0, 1) = s(1, 0) = v[3];
                sc.initial.uniform = s;
            }
        }
    } else if (kind == "geostatic") {
        sc.initial.kind = InitialStressKind::Geostatic;
        sc.initial.k0 = r.require(n, "k0", p);
        if (n["k0"] && !(sc.initial.k0 > 0.0 && sc.initial.k0 <= 1.0)) r.fail(n["k0"], p + ".k0", "must lie in (0, 1]");
    } else {
        r.fail(n["kind"], p + ".kind", "expected 'none', 'uniform' or 'geostatic'");
    }
}

void read_relaxation(Reader& r, const YAML::Node& n, Scenario& sc) {
    if (!n) return;
    const std::string p = "relaxation";
    r.check_keys(n, p, {"enabled", "damping", "energy_ratio", "min_steps", "max_steps", "dt"});
    auto& rc = sc.relaxation;
    rc.enabled = r.flag(n, "enabled", p).value_or(true);
    rc.damping = r.number(n, "damping", p).value_or(0.8);
    if (rc.damping < 0.0 || rc.damping >= 1.0) r.fail(n["damping"], p + ".damping", "must lie in [0, 1)");
    rc.energy_ratio = r.positive(n, "energy_ratio", p, false, 1e-6);
    rc.min_steps = static_cast<long>(r.number(n, "min_steps", p).value_or(200));
    rc.max_steps = static_cast<long>(r.positive(n, "max_steps", p, false, 200000));
    if (n["dt"]) rc.dt = r.positive(n, "dt", p);
}

std::optional<Selector> read_selector(Reader& r, const YAML::Node& n, const std::string& p) {
    Selector s;
    if (!n) {
        r.fail(n, p, "missing");
        return std::nullopt;
    }
    if (n.IsScalar()) {
        const auto v = n.as<std::string>();
        if (v == "all") {
            s.kind = Selector::Kind::All;
            return s;
        }
        if (v == "eroded") {
            s.kind = Selector::Kind::Eroded;
            return s;
        }
        r.fail(n, p, "expected 'all', 'eroded', {face: ...} or {box: ...}");
        return std::nullopt;
    }
    r.check_keys(n, p, {"face", "layers", "box"});
    if (n["face"]) {
        s.kind = Selector::Kind::Face;
        const auto f = r.text(n, "face", p).value_or("");
        const auto it = kFaceNames.find(f);
        if (it == kFaceNames.end()) {
            r.fail(n["face"], p + ".face", "expected left, right, bottom or top");
            return std::nullopt;
        }
        s.face = it->second;
        s.layers = static_cast<int>(r.number(n, "layers", p).value_or(1));
        if (s.layers < 1) r.fail(n["layers"], p + ".layers", "must be at least 1");
        return s;
    }
    if (n["box"]) {
        s.kind = Selector::Kind::Box;
        const auto v = r.numbers(n["box"], p + ".box", 4);
        if (v.size() != 4) return std::nullopt;
        s.box = Rectangle{v[0], v[1], v[2], v[3]};
        return s;
    }
    r.fail(n, p, "expected 'face' or 'box'");
    return std::nullopt;
}

void read_conditions(Reader& r, const YAML::Node& n, Scenario& sc) {
    if (!n) return;
    if (!n.IsSequence()) {
        r.fail(n, "boundary_conditions", "expected a list");
        return;
    }
    std::set<std::string> names;
    std::size_t k = 0;
    for (const auto& c : n) {
        const std::string p = fmt::format("boundary_conditions[{}]", k++);
        r.check_keys(c, p, {"name", "type", "select", "component", "schedule", "value", "release_time"});
        BoundaryCondition bc;
        bc.name = r.text(c, "name", p).value_or(fmt::format("bc{}", k - 1));
        if (!names.insert(bc.name).second) r.fail(c["name"], p + ".name", "duplicate condition name");
        const auto type = r.text(c, "type", p).value_or("");
        if (type == "displacement")
            bc.kind = BcKind::PrescribedDisplacement;
        else if (type == "fixed")
            bc.kind = BcKind::Fixed;
        else if (type == "traction")
            bc.kind = BcKind::ConstantTraction;
        else if (type == "retaining")
            bc.kind = BcKind::RetainingForce;
        else
            r.fail(c["type"] ? c["type"] : c, p + ".type", "expected displacement, fixed, traction or retaining");
        if (const auto sel = read_selector(r, c["select"], p + ".select")) bc.selector = *sel;
        const auto comp = r.text(c, "component", p);
        if (comp) {
            if (*comp == "x")
                bc.component = 0;
            else if (*comp == "y")
                bc.component = 1;
            else if (*comp == "both")
                bc.component = -1;
            else
                r.fail(c["component"], p + ".component", "expected x, y or both");
        }
        if (bc.kind == BcKind::PrescribedDisplacement && bc.component < 0)
            r.fail(c, p + ".component", "a prescribed displacement needs component x or y");
        if (bc.kind == BcKind::PrescribedDisplacement || bc.kind == BcKind::ConstantTraction) {
            const auto s = r.schedule(c, p);
            if (!s)
                r.fail(c, p, "needs a 'schedule' or 'value'");
            else
                bc.schedule = *s;
        }
        if (c["release_time"]) {
            bc.release_time = r.number(c, "release_time", p);
            if (bc.release_time && *bc.release_time < 0.0)
                r.fail(c["release_time"], p + ".release_time", "must be non-negative");
        }
        if (bc.kind == BcKind::RetainingForce && bc.selector.kind != Selector::Kind::Eroded)
            r.fail(c, p + ".select", "a retaining force acts on the eroded faces: use 'select: eroded'");
        sc.conditions.push_back(std::move(bc));
    }
}

void read_base(Reader& r, const YAML::Node& n, Scenario& sc) {
    if (!n) return;
    const std::string p = "base";
    r.check_keys(n, p, {"level", "friction", "penalty", "stick_velocity"});
    FrictionalBaseConfig b;
    b.level = r.number(n, "level", p).value_or(0.0);
    b.mu = r.number(n, "friction", p).value_or(0.0);
    if (b.mu < 0.0) r.fail(n["friction"], p + ".friction", "must be non-negative");
    b.penalty = r.number(n, "penalty", p).value_or(0.0);
    if (b.penalty < 0.0) r.fail(n["penalty"], p + ".penalty", "must be non-negative (0 selects the default)");
    b.stick_velocity = r.positive(n, "stick_velocity", p, false, 1e-6);
    sc.base = b;
}

void read_output(Reader& r, const YAML::Node& n, Scenario& sc) {
    if (!n) return;
    const std::string p = "output";
    r.check_keys(n, p, {"directory", "interval", "fields", "reaction", "profile_bin", "log_interval", "checkpoint_every"});
    auto& o = sc.output;
    o.directory = r.text(n, "directory", p).value_or(o.directory);
    o.interval = r.number(n, "interval", p).value_or(0.0);
    if (o.interval < 0.0) r.fail(n["interval"], p + ".interval", "must be non-negative");
    if (const YAML::Node f = n["fields"]) {
        o.fields.clear();
        if (!f.IsSequence()) {
            r.fail(f, p + ".fields", "expected a list of field names");
        } else {
            for (const auto& e : f) {
                const auto name = e.as<std::string>();
                bool found = false;
                for (const auto field : all_snapshot_fields()) {
                    if (name == field_name(field)) {
                        o.fields.push_back(field);
                        found = true;
                    }
                }
                if (!found) r.fail(e, p + ".fields", fmt::format("unknown field '{}'", name));
            }
        }
    }
    o.reaction = r.text(n, "reaction", p);
    if (n["profile_bin"]) o.profile_bin = r.positive(n, "profile_bin", p);
    o.log_interval = r.number(n, "log_interval", p).value_or(0.0);
    if (n["checkpoint_every"]) o.checkpoint_every = r.positive(n, "checkpoint_every", p);
}

void cross_check(Reader& r, Scenario& sc) {
    const double end = sc.integrator.end_time;
    for (const auto& bc : sc.conditions) {
        for (const auto& [t, v] : bc.schedule.points()) {
            if (t < 0.0 || t > end + 1e-12) {
                r.errors.push_back(fmt::format("boundary condition '{}': schedule time {} outside [0, end_time = {}]",
                                               bc.name, t, end));
                break;
            }
        }
        if (bc.release_time && *bc.release_time > end)
            r.errors.push_back(fmt::format("boundary condition '{}': release_time beyond end_time", bc.name));
        if (bc.selector.kind == Selector::Kind::Eroded && sc.geometry && sc.geometry->eroded.empty())
            r.errors.push_back(fmt::format("boundary condition '{}' selects eroded faces but no eroded region is defined",
                                           bc.name));
    }
    if (sc.output.reaction) {
        const auto it = std::find_if(sc.conditions.begin(), sc.conditions.end(),
                                     [&](const auto& bc) { return bc.name == *sc.output.reaction; });
        if (it == sc.conditions.end() || it->kind != BcKind::PrescribedDisplacement)
            r.errors.push_back(fmt::format("output.reaction: '{}' is not a prescribed-displacement condition",
                                           *sc.output.reaction));
    }
    if (sc.initial.kind == InitialStressKind::Geostatic && sc.gravity.y() >= 0.0)
        r.errors.emplace_back("initial_stress: geostatic initialization needs downward gravity");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError({fmt::format("line {}: malformed YAML: {}", e.mark.line + 1, e.msg)});
    }
    Reader r;
    Scenario sc;
    if (!root || root.IsNull()) throw ScenarioError({"geometry missing", "material missing", "discretization missing",
                                                      "integrator missing"});
    if (!root.IsMap()) throw ScenarioError({"top level must be a key-value map"});
    r.check_keys(root, "", {"name", "description", "geometry", "material", "discretization", "integrator", "gravity",
                            "initial_stress", "relaxation", "boundary_conditions", "base", "output"});
    sc.name = r.text(root, "name", "scenario").value_or("scenario");
    sc.description = r.text(root, "description", "scenario").value_or("");
    read_geometry(r, root["geometry"], sc);
    read_material(r, root["material"], sc);
    read_discretization(r, root["discretization"], sc);
    read_integrator(r, root["integrator"], sc);
    if (root["gravity"])
        if (const auto g = r.vec2(root["gravity"], "gravity")) sc.gravity = *g;
    read_initial(r, root["initial_stress"], sc);
    read_relaxation(r, root["relaxation"], sc);
    read_conditions(r, root["boundary_conditions"], sc);
    read_base(r, root["base"], sc);
    read_output(r, root["output"], sc);
    cross_check(r, sc);
    if (!r.errors.empty()) throw ScenarioError(r.errors);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open scenario file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

namespace {

void emit_points(YAML::Emitter& e, const std::vector<Vec2>& pts) {
    e << YAML::BeginSeq;
    for (const auto& v : pts) e << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << YAML::EndSeq;
    e << YAML::EndSeq;
}

}  // namespace

void write_scenario(std::ostream& os, const Scenario& sc) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << sc.name;
    if (!sc.description.empty()) e << YAML::Key << "description" << YAML::Value << sc.description;

    if (sc.geometry) {
        e << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
        if (const auto* rect = std::get_if<Rectangle>(&sc.geometry->region)) {
            e << YAML::Key << "rectangle" << YAML::Value << YAML::Flow << YAML::BeginSeq << rect->x_min << rect->y_min
              << rect->x_max << rect->y_max << YAML::EndSeq;
        } else {
            e << YAML::Key << "polygon" << YAML::Value;
            emit_points(e, std::get<Polygon>(sc.geometry->region).vertices);
        }
        if (!sc.geometry->eroded.empty()) {
            e << YAML::Key << "eroded" << YAML::Value << YAML::BeginSeq;
            for (const auto& p : sc.geometry->eroded) emit_points(e, p.vertices);
            e << YAML::EndSeq;
        }
        e << YAML::EndMap;
    }

    const auto& m = sc.material;
    e << YAML::Key << "material" << YAML::Value << YAML::BeginMap;
    if (m.intrinsic_density) e << YAML::Key << "intrinsic_density" << YAML::Value << *m.intrinsic_density;
    if (m.partial_density) e << YAML::Key << "partial_density" << YAML::Value << *m.partial_density;
    e << YAML::Key << "porosity" << YAML::Value << m.porosity;
    if (m.moduli_input == ModuliInput::BulkShear) {
        e << YAML::Key << "bulk_modulus" << YAML::Value << m.modulus_a;
        e << YAML::Key << "shear_modulus" << YAML::Value << m.modulus_b;
    } else {
        e << YAML::Key << "young_modulus" << YAML::Value << m.modulus_a;
        e << YAML::Key << "poisson_ratio" << YAML::Value << m.modulus_b;
    }
    const auto& dp = m.plasticity;
    e << YAML::Key << "cohesion" << YAML::Value << dp.c0;
    e << YAML::Key << "residual_cohesion" << YAML::Value << dp.c_residual;
    e << YAML::Key << "hardening_modulus" << YAML::Value << dp.h;
    e << YAML::Key << "friction_angle" << YAML::Value << dp.friction_deg;
    e << YAML::Key << "dilatancy_angle" << YAML::Value << dp.dilatancy_deg;
    e << YAML::Key << "cone_fit" << YAML::Value << (dp.fit == ConeFit::Compression ? "compression" : "plane_strain");
    e << YAML::Key << "yield" << YAML::Value << m.yield_enabled;
    e << YAML::EndMap;

    const auto& d = sc.discretization;
    e << YAML::Key << "discretization" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "spacing" << YAML::Value << d.spacing;
    e << YAML::Key << "horizon_ratio" << YAML::Value << d.horizon_ratio;
    e << YAML::Key << "influence" << YAML::Value
      << (d.influence == InfluenceKind::Constant ? "constant" : "cubic_spline");
    e << YAML::Key << "volume_correction" << YAML::Value << d.volume_correction;
    e << YAML::EndMap;

    e << YAML::Key << "integrator" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dt" << YAML::Value << sc.integrator.dt;
    e << YAML::Key << "end_time" << YAML::Value << sc.integrator.end_time;
    e << YAML::Key << "damping" << YAML::Value << sc.damping;
    e << YAML::Key << "stabilization" << YAML::Value << sc.stabilization;
    e << YAML::EndMap;

    e << YAML::Key << "gravity" << YAML::Value << YAML::Flow << YAML::BeginSeq << sc.gravity.x() << sc.gravity.y()
      << YAML::EndSeq;

    e << YAML::Key << "initial_stress" << YAML::Value << YAML::BeginMap;
    switch (sc.initial.kind) {
        case InitialStressKind::None: e << YAML::Key << "kind" << YAML::Value << "none"; break;
        case InitialStressKind::Uniform: {
            const Mat3& s = sc.initial.uniform;
            e << YAML::Key << "kind" << YAML::Value << "uniform";
            e << YAML::Key << "stress" << YAML::Value << YAML::Flow << YAML::BeginSeq << s(0, 0) << s(1, 1) << s(2, 2)
              << s(0, 1) << YAML::EndSeq;
            break;
        }
        case InitialStressKind::Geostatic:
            e << YAML::Key << "kind" << YAML::Value << "geostatic";
            e << YAML::Key << "k0" << YAML::Value << sc.initial.k0;
            break;
    }
    e << YAML::EndMap;

    const auto& rc = sc.relaxation;
    e << YAML::Key << "relaxation" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "enabled" << YAML::Value << rc.enabled;
    e << YAML::Key << "damping" << YAML::Value << rc.damping;
    e << YAML::Key << "energy_ratio" << YAML::Value << rc.energy_ratio;
    e << YAML::Key << "min_steps" << YAML::Value << rc.min_steps;
    e << YAML::Key << "max_steps" << YAML::Value << rc.max_steps;
    if (rc.dt) e << YAML::Key << "dt" << YAML::Value << *rc.dt;
    e << YAML::EndMap;

    if (!sc.conditions.empty()) {
        e << YAML::Key << "boundary_conditions" << YAML::Value << YAML::BeginSeq;
        for (const auto& bc : sc.conditions) {
            e << YAML::BeginMap;
            e << YAML::Key << "name" << YAML::Value << bc.name;
            const char* type = "fixed";
            switch (bc.kind) {
                case BcKind::PrescribedDisplacement: type = "displacement"; break;
                case BcKind::Fixed: type = "fixed"; break;
                case BcKind::ConstantTraction: type = "traction"; break;
                case BcKind::RetainingForce: type = "retaining"; break;
            }
            e << YAML::Key << "type" << YAML::Value << type;
            e << YAML::Key << "select" << YAML::Value;
            switch (bc.selector.kind) {
                case Selector::Kind::All: e << "all"; break;
                case Selector::Kind::Eroded: e << "eroded"; break;
                case Selector::Kind::Face:
                    e << YAML::Flow << YAML::BeginMap << YAML::Key << "face" << YAML::Value
                      << face_label(bc.selector.face) << YAML::Key << "layers" << YAML::Value << bc.selector.layers
                      << YAML::EndMap;
                    break;
                case Selector::Kind::Box: {
                    const auto& b = bc.selector.box;
                    e << YAML::Flow << YAML::BeginMap << YAML::Key << "box" << YAML::Value << YAML::Flow
                      << YAML::BeginSeq << b.x_min << b.y_min << b.x_max << b.y_max << YAML::EndSeq << YAML::EndMap;
                    break;
                }
            }
            e << YAML::Key << "component" << YAML::Value
              << (bc.component == 0 ? "x" : (bc.component == 1 ? "y" : "both"));
            if (bc.kind == BcKind::PrescribedDisplacement || bc.kind == BcKind::ConstantTraction) {
                e << YAML::Key << "schedule" << YAML::Value << YAML::BeginSeq;
                for (const auto& [t, v] : bc.schedule.points())
                    e << YAML::Flow << YAML::BeginSeq << t << v << YAML::EndSeq;
                e << YAML::EndSeq;
            }
            if (bc.release_time) e << YAML::Key << "release_time" << YAML::Value << *bc.release_time;
            e << YAML::EndMap;
        }
        e << YAML::EndSeq;
    }

    if (sc.base) {
        e << YAML::Key << "base" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "level" << YAML::Value << sc.base->level;
        e << YAML::Key << "friction" << YAML::Value << sc.base->mu;
        e << YAML::Key << "penalty" << YAML::Value << sc.base->penalty;
        e << YAML::Key << "stick_velocity" << YAML::Value << sc.base->stick_velocity;
        e << YAML::EndMap;
    }

    const auto& o = sc.output;
    e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "directory" << YAML::Value << o.directory;
    e << YAML::Key << "interval" << YAML::Value << o.interval;
    e << YAML::Key << "fields" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto f : o.fields) e << field_name(f);
    e << YAML::EndSeq;
    if (o.reaction) e << YAML::Key << "reaction" << YAML::Value << *o.reaction;
    if (o.profile_bin) e << YAML::Key << "profile_bin" << YAML::Value << *o.profile_bin;
    e << YAML::Key << "log_interval" << YAML::Value << o.log_interval;
    if (o.checkpoint_every) e << YAML::Key << "checkpoint_every" << YAML::Value << *o.checkpoint_every;
    e << YAML::EndMap;

    e << YAML::EndMap;
    os << e.c_str() << "\n";
}

ModelSetup build_setup(const Scenario& sc) {
    if (!sc.geometry) throw ScenarioError({"geometry missing"});
    ModelSetup setup;
    const auto& d = sc.discretization;
    setup.points = build_grid(sc.geometry->region, d.spacing, sc.geometry->eroded);
    if (sc.material.partial_density)
        assign_partial_density(setup.points, *sc.material.partial_density, sc.material.porosity);
    else
        assign_solid_density(setup.points, sc.material.intrinsic_density.value_or(0.0), sc.material.porosity);
    setup.family = build_families(setup.points, d.horizon_ratio * d.spacing, {d.influence, d.volume_correction});
    setup.material = {sc.material.moduli(), sc.material.plasticity, sc.material.yield_enabled};
    setup.gravity = sc.gravity;
    setup.stabilization = sc.stabilization;
    setup.conditions = sc.conditions;
    setup.base = sc.base;
    setup.integrator = sc.integrator;
    setup.initial = sc.initial;
    setup.relaxation = sc.relaxation;
    setup.damping = sc.damping;
    return setup;
}

}  // namespace ppm
