#pragma once

// Run configuration (JSON), CSV tables and run manifests.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lbd/error.hpp"
#include "lbd/model.hpp"
#include "lbd/simulate.hpp"
#include "lbd/value.hpp"

namespace lbd::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

struct CalibrationConfig {
    std::size_t paths = 50000;
    double horizon = 10.0;
    double u = 0.5;
    double pi = 0.5;
};

struct DiscreteConfig {
    std::size_t N = 5;
    std::optional<std::vector<double>> gamma;  ///< overrides sampling the rate family
};

struct RunConfig {
    std::string name = "run";
    ModelParams model;
    RateSpec rate;
    std::size_t grid = 2001;
    ValueDiagnosticsOptions diagnostics;
    SimConfig sim;
    std::size_t trajectory_stride = 20;
    std::optional<CalibrationConfig> calibration;
    DiscreteConfig discrete;
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Object reader that rejects unknown keys so typos do not pass silently.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }
    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const Json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing required key '" + key + "'");
        return j_.at(key);
    }

    double number(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError(name(key) + ": expected a number");
        return v.get<double>();
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::size_t count(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(name(key) + ": expected a non-negative integer");
        return static_cast<std::size_t>(v.get<unsigned long long>());
    }

    std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }

    std::string text(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) throw ConfigError(name(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) throw ConfigError(name(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(name(key) + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    Section sub(const std::string& key) { return Section(at(key), name(key)); }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }

private:
    std::string name(const std::string& key) const { return path_ + "." + key; }
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline RateSpec parse_rate(Section s) {
    const std::string fam = s.text("family");
    RateSpec spec;
    if (fam == "linear_noise") {
        spec = RateSpec(LinearNoise{s.number("C"), s.number("D")});
    } else if (fam == "quadratic_noise") {
        spec = RateSpec(QuadraticNoise{s.number("C"), s.number("D"), s.number("E")});
    } else if (fam == "hyperbolic_gamma") {
        spec = RateSpec(HyperbolicGamma{s.number("A"), s.number("beta")});
    } else if (fam == "sqrt_expansion") {
        spec = RateSpec(SqrtExpansion{s.number("C"), s.number("eps", 1e-3)});
    } else if (fam == "tabulated") {
        spec = RateSpec(Tabulated{s.numbers("rho")});
    } else {
        throw ConfigError("rate.family: unknown family '" + fam + "'");
    }
    s.finish();
    return spec;
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
    RunConfig cfg;
    detail::Section root(j, "config");
    const auto& ver = root.at("schema_version");
    if (!ver.is_number_integer() || ver.get<int>() != kSchemaVersion)
        throw ConfigError("config.schema_version: expected " + std::to_string(kSchemaVersion));
    if (root.has("name")) cfg.name = root.text("name");

    try {
        auto m = root.sub("model");
        const double r = m.number("r");
        if (m.has("k")) {
            if (m.has("mu0") || m.has("mu1")) throw ConfigError("config.model: give either k or (mu0, mu1), not both");
            cfg.model = ModelParams{r, m.number("k")};
            cfg.model.validate();
        } else if (m.has("mu0") || m.has("mu1")) {
            cfg.model = ModelParams::from_project(r, m.number("mu0"), m.number("mu1"));
        } else {
            throw ConfigError("config.model: missing required key 'k' (or 'mu0' and 'mu1')");
        }
        m.finish();
        cfg.rate = detail::parse_rate(root.sub("rate"));
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }

    if (root.has("boundary")) {
        auto b = root.sub("boundary");
        cfg.grid = b.count("grid", cfg.grid);
        b.finish();
    }
    if (root.has("verify")) {
        auto v = root.sub("verify");
        cfg.diagnostics.samples = v.count("samples", cfg.diagnostics.samples);
        cfg.diagnostics.boundary_points = v.count("boundary_points", cfg.diagnostics.boundary_points);
        v.finish();
    }
    if (root.has("simulate")) {
        auto s = root.sub("simulate");
        cfg.sim.dt = s.number("dt", cfg.sim.dt);
        cfg.sim.horizon = s.number("horizon", cfg.sim.horizon);
        cfg.sim.n_paths = s.count("paths", cfg.sim.n_paths);
        cfg.sim.seed = s.count("seed", cfg.sim.seed);
        cfg.sim.start_u = s.number("u0", cfg.sim.start_u);
        cfg.sim.start_pi = s.number("pi0", cfg.sim.start_pi);
        cfg.sim.threads = static_cast<unsigned>(s.count("threads", cfg.sim.threads));
        cfg.sim.tail_tolerance = s.number("tail_tolerance", cfg.sim.tail_tolerance);
        cfg.trajectory_stride = s.count("trajectory_stride", cfg.trajectory_stride);
        if (s.has("calibration")) {
            auto c = s.sub("calibration");
            CalibrationConfig cc;
            cc.paths = c.count("paths", cc.paths);
            cc.horizon = c.number("horizon", cc.horizon);
            cc.u = c.number("u", cc.u);
            cc.pi = c.number("pi", cc.pi);
            c.finish();
            cfg.calibration = cc;
        }
        s.finish();
    }
    if (root.has("discrete")) {
        auto d = root.sub("discrete");
        if (d.has("gamma")) {
            cfg.discrete.gamma = d.numbers("gamma");
            if (cfg.discrete.gamma->empty()) throw ConfigError("config.discrete.gamma: must not be empty");
            cfg.discrete.N = cfg.discrete.gamma->size() - 1;
            if (d.has("N") && d.count("N") != cfg.discrete.N)
                throw ConfigError("config.discrete: N disagrees with the length of gamma");
        } else {
            cfg.discrete.N = d.count("N", cfg.discrete.N);
        }
        d.finish();
    }
    root.finish();
    return cfg;
}

inline Json rate_to_json(const RateSpec& spec) {
    Json j;
    j["family"] = std::string(spec.family_name());
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearNoise>) {
                j["C"] = f.C;
                j["D"] = f.D;
            } else if constexpr (std::is_same_v<T, QuadraticNoise>) {
                j["C"] = f.C;
                j["D"] = f.D;
                j["E"] = f.E;
            } else if constexpr (std::is_same_v<T, HyperbolicGamma>) {
                j["A"] = f.A;
                j["beta"] = f.beta;
            } else if constexpr (std::is_same_v<T, SqrtExpansion>) {
                j["C"] = f.C;
                j["eps"] = f.eps;
            } else {
                j["rho"] = f.rho;
            }
        },
        spec.family());
    return j;
}

/// The effective configuration (after command-line overrides), in canonical form.
inline Json config_to_json(const RunConfig& c) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = c.name;
    j["model"] = {{"r", c.model.r}, {"k", c.model.k}};
    j["rate"] = rate_to_json(c.rate);
    j["boundary"] = {{"grid", c.grid}};
    j["verify"] = {{"samples", c.diagnostics.samples}, {"boundary_points", c.diagnostics.boundary_points}};
    Json s = {{"dt", c.sim.dt},         {"horizon", c.sim.horizon},
              {"paths", c.sim.n_paths}, {"seed", c.sim.seed},
              {"u0", c.sim.start_u},    {"pi0", c.sim.start_pi},
              {"threads", c.sim.threads}, {"tail_tolerance", c.sim.tail_tolerance},
              {"trajectory_stride", c.trajectory_stride}};
    if (c.calibration)
        s["calibration"] = {{"paths", c.calibration->paths},
                            {"horizon", c.calibration->horizon},
                            {"u", c.calibration->u},
                            {"pi", c.calibration->pi}};
    j["simulate"] = s;
    Json d = {{"N", c.discrete.N}};
    if (c.discrete.gamma) d["gamma"] = *c.discrete.gamma;
    j["discrete"] = d;
    return j;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError("'" + path.string() + "': invalid JSON: " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Hashing and output files
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

/// Shortest decimal form that round-trips a double.
inline std::string format_number(double x) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

/// Write `content` to `path` through a temporary file and a rename. Refuses
/// to replace an existing file.
inline void write_new_file(const fs::path& path, const std::string& content) {
    if (fs::exists(path)) throw ConfigError("refusing to overwrite existing output '" + path.string() + "'");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("CSV: missing column '" + name + "'");
    }
    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
    std::vector<double> values(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

inline std::string to_csv(const Table& t) {
    std::string s;
    for (std::size_t i = 0; i < t.header.size(); ++i) s += (i ? "," : "") + t.header[i];
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
        s += "\n";
    }
    return s;
}

inline Table parse_csv(const std::string& text, const std::string& origin = "CSV") {
    Table t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            out.push_back(cell);
        }
        return out;
    };
    if (!std::getline(in, line) || line.find_first_not_of(" \r\t") == std::string::npos)
        throw ConfigError(origin + ": empty file");
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ConfigError(origin + ": line " + std::to_string(lineno) + " has the wrong number of fields");
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size())
                throw ConfigError(origin + ": line " + std::to_string(lineno) + ": '" + c + "' is not a number");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) throw ConfigError(origin + ": no data rows");
    return t;
}

inline Table read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string command;
    std::string config_hash;
    Json config;
    Json checks = Json::object();
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;
    bool success = true;

    void check(const std::string& name, bool ok) {
        checks[name] = ok;
        success = success && ok;
    }

    Json to_json() const {
        Json j;
        j["tool"] = "lbd";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["config"] = config;
        j["checks"] = checks;
        j["status"] = success ? "pass" : "fail";
        j["outputs"] = outputs;
        j["wall_clock_seconds"] = wall_clock_seconds;
        return j;
    }
};

}  // namespace lbd::io
