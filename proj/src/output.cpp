#include "ppm/output.hpp"

#include "ppm/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ppm {

namespace fs = std::filesystem;

const std::vector<double>& Snapshot::field(const std::string& name) const {
    for (const auto& [n, v] : fields)
        if (n == name) return v;
    throw Error(fmt::format("snapshot has no field '{}'", name));
}

bool Snapshot::has_field(const std::string& name) const {
    for (const auto& f : fields)
        if (f.first == name) return true;
    return false;
}

void write_vtk(std::ostream& os, const Snapshot& s) {
    const std::size_t n = s.positions.size();
    for (const auto& [name, values] : s.fields)
        if (values.size() != n) throw Error(fmt::format("field '{}' has {} values for {} points", name, values.size(), n));
    std::string out;
    out.reserve(n * (40 + 17 * s.fields.size()) + 256);
    out += "# vtk DataFile Version 3.0\n";
    out += fmt::format("ppm snapshot step {} time {:.9e}\n", s.step, s.time);
    out += "ASCII\nDATASET POLYDATA\n";
    out += fmt::format("POINTS {} double\n", n);
    for (const auto& p : s.positions) out += fmt::format("{:.9e} {:.9e} 0\n", p.x(), p.y());
    out += fmt::format("VERTICES {} {}\n", n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) out += fmt::format("1 {}\n", i);
    out += fmt::format("POINT_DATA {}\n", n);
    for (const auto& [name, values] : s.fields) {
        out += fmt::format("SCALARS {} double 1\nLOOKUP_TABLE default\n", name);
        for (const double v : values) out += fmt::format("{:.9e}\n", v == 0.0 ? 0.0 : v);
    }
    os << out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", path.string()));
    out << text;
    out.flush();
    if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

void write_vtk(const fs::path& path, const Snapshot& s) {
    std::ostringstream ss;
    write_vtk(ss, s);
    write_text(path, ss.str());
}

Snapshot read_vtk(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open snapshot '{}'", path.string()));
    Snapshot s;
    std::string line;
    std::getline(in, line);
    if (line.rfind("# vtk DataFile", 0) != 0) throw Error(fmt::format("'{}' is not a legacy VTK file", path.string()));
    std::getline(in, line);
    if (std::sscanf(line.c_str(), "ppm snapshot step %ld time %lf", &s.step, &s.time) != 2)
        throw Error(fmt::format("'{}' lacks a ppm snapshot title", path.string()));
    std::string word;
    std::size_t n = 0;
    while (in >> word) {
        if (word == "POINTS") {
            in >> n >> word;
            s.positions.resize(n);
            double z = 0.0;
            for (auto& p : s.positions) in >> p.x() >> p.y() >> z;
        } else if (word == "VERTICES") {
            std::size_t cells = 0, total = 0;
            in >> cells >> total;
            for (std::size_t k = 0; k < total; ++k) in >> word;
        } else if (word == "SCALARS") {
            std::string name, type;
            int comps = 1;
            in >> name >> type >> comps >> word >> word;  // LOOKUP_TABLE default
            std::vector<double> values(n);
            for (auto& v : values) in >> v;
            s.fields.emplace_back(name, std::move(values));
        }
        if (!in) throw Error(fmt::format("malformed snapshot '{}'", path.string()));
    }
    return s;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    std::string out = "index,step,time,file\n";
    for (const auto& e : entries) out += fmt::format("{},{},{:.9e},{}\n", e.index, e.step, e.time, e.file);
    write_text(path, out);
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open manifest '{}'", path.string()));
    std::vector<ManifestEntry> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ManifestEntry e;
        char file[4096] = {};
        if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%4095s", &e.index, &e.step, &e.time, file) != 4)
            throw Error(fmt::format("malformed manifest line '{}'", line));
        e.file = file;
        out.push_back(e);
    }
    return out;
}

std::vector<LoadPoint> read_loading_curve(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open loading curve '{}'", path.string()));
    std::vector<LoadPoint> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        LoadPoint p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.time, &p.displacement, &p.reaction) == 3) out.push_back(p);
    }
    return out;
}

std::vector<ProfileBin> read_ground_profile(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open ground profile '{}'", path.string()));
    std::vector<ProfileBin> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        ProfileBin b;
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        b.x = std::stod(line.substr(0, comma));
        const std::string h = line.substr(comma + 1);
        b.valid = h != "nan";
        b.height = b.valid ? std::stod(h) : 0.0;
        out.push_back(b);
    }
    return out;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Binary checkpoint: magic, version, then length-prefixed little-endian arrays.

namespace {

constexpr char kMagic[8] = {'P', 'P', 'M', 'C', 'K', 'P', 'T', '\0'};

class Out {
public:
    explicit Out(const fs::path& p) : os_(p, std::ios::binary | std::ios::trunc), path_(p) {
        if (!os_) throw Error(fmt::format("cannot open checkpoint '{}' for writing", p.string()));
    }
    template <class T>
    void pod(const T& v) {
        os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <class T>
    void vec(const std::vector<T>& v) {
        pod<std::uint64_t>(v.size());
        if (!v.empty()) os_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(T) * v.size()));
    }
    void str(const std::string& s) {
        pod<std::uint64_t>(s.size());
        os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void finish() {
        os_.flush();
        if (!os_) throw Error(fmt::format("write to checkpoint '{}' failed", path_.string()));
    }

private:
    std::ofstream os_;
    fs::path path_;
};

class In {
public:
    explicit In(const fs::path& p) : is_(p, std::ios::binary), path_(p) {
        if (!is_) throw Error(fmt::format("cannot open checkpoint '{}'", p.string()));
    }
    template <class T>
    T pod() {
        T v{};
        is_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }
    template <class T>
    std::vector<T> vec() {
        const auto n = pod<std::uint64_t>();
        if (n > (1ull << 32)) throw Error(fmt::format("corrupt checkpoint '{}'", path_.string()));
        std::vector<T> v(n);
        if (n) is_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(T) * n));
        check();
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint64_t>();
        if (n > (1ull << 20)) throw Error(fmt::format("corrupt checkpoint '{}'", path_.string()));
        std::string s(n, '\0');
        is_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

private:
    void check() {
        if (!is_) throw Error(fmt::format("truncated checkpoint '{}'", path_.string()));
    }
    std::ifstream is_;
    fs::path path_;
};

}  // namespace

void write_checkpoint(const fs::path& path, const Checkpoint& c) {
    // Write beside the target and rename, so an interrupted dump never clobbers the last good one.
    const fs::path tmp = path.string() + ".tmp";
    {
        Out o(tmp);
        for (const char ch : kMagic) o.pod(ch);
        o.pod<std::uint32_t>(Checkpoint::kVersion);
        o.pod(c.scenario_hash);
        const auto& s = c.state;
        o.pod(s.time);
        o.pod<std::int64_t>(s.step);
        o.pod<std::uint8_t>(s.plastic ? 1 : 0);
        o.pod<std::int64_t>(c.relaxation_steps);
        o.vec(s.u);
        o.vec(s.v);
        o.vec(s.a);
        o.vec(s.u_init);
        o.vec(s.F);
        o.vec(s.be);
        o.vec(s.tau);
        o.vec(s.zeta);
        o.vec(s.eps_ps);
        o.vec(s.eps_pv);
        o.vec(s.dgamma);
        o.vec(c.window_piola);
        o.vec(c.window_F);
        o.pod<std::uint64_t>(c.manifest.size());
        for (const auto& e : c.manifest) {
            o.pod<std::int64_t>(e.index);
            o.pod<std::int64_t>(e.step);
            o.pod(e.time);
            o.str(e.file);
        }
        o.vec(c.curve);
        o.finish();
    }
    fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const fs::path& path) {
    In in(path);
    for (const char ch : kMagic)
        if (in.pod<char>() != ch) throw Error(fmt::format("'{}' is not a ppm checkpoint", path.string()));
    const auto version = in.pod<std::uint32_t>();
    if (version != Checkpoint::kVersion)
        throw Error(fmt::format("checkpoint '{}' has format version {}, expected {}", path.string(), version,
                                Checkpoint::kVersion));
    Checkpoint c;
    c.scenario_hash = in.pod<std::uint64_t>();
    auto& s = c.state;
    s.time = in.pod<double>();
    s.step = in.pod<std::int64_t>();
    s.plastic = in.pod<std::uint8_t>() != 0;
    c.relaxation_steps = in.pod<std::int64_t>();
    s.u = in.vec<Vec2>();
    s.v = in.vec<Vec2>();
    s.a = in.vec<Vec2>();
    s.u_init = in.vec<Vec2>();
    s.F = in.vec<Mat3>();
    s.be = in.vec<Mat3>();
    s.tau = in.vec<Mat3>();
    s.zeta = in.vec<double>();
    s.eps_ps = in.vec<double>();
    s.eps_pv = in.vec<double>();
    s.dgamma = in.vec<double>();
    c.window_piola = in.vec<Mat3>();
    c.window_F = in.vec<Mat3>();
    const auto m = in.pod<std::uint64_t>();
    for (std::uint64_t k = 0; k < m; ++k) {
        ManifestEntry e;
        e.index = in.pod<std::int64_t>();
        e.step = in.pod<std::int64_t>();
        e.time = in.pod<double>();
        e.file = in.str();
        c.manifest.push_back(std::move(e));
    }
    c.curve = in.vec<LoadPoint>();
    return c;
}

}  // namespace ppm
