#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bsyn/assimilation.hpp"

namespace bsyn::io {

struct SweepConfig {
    std::vector<double> mu_list{0.0, 50.0, 100.0, 200.0};
    std::vector<double> h_list{0.05};
    int parallelism = 1;
};

struct RunConfig {
    DAConfig da{};
    SweepConfig sweep{};
};

/// Formats a double so that parsing it back gives the same bits.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError("malformed number '" + v + "'");
    return x;
}

template <class Int>
Int parse_int(const std::string& v) {
    Int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("malformed integer '" + v + "'");
    return x;
}

inline std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s;
}

/// Raw values plus the line each came from.
struct Entries {
    std::map<std::string, std::pair<std::string, int>> kv;  // "section.key" -> (value, line)
    int line_of(const std::string& key) const {
        auto it = kv.find(key);
        return it == kv.end() ? 0 : it->second.second;
    }
};

inline std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : "config: "; }

}  // namespace detail

/// Parses the sectioned key = value format. Comments start with '#' or ';'.
/// Unknown sections or keys, duplicates, malformed values and violated
/// invariants are errors that name the offending line.
inline RunConfig parse_config_text(const std::string& text) {
    using namespace detail;
    RunConfig rc;
    Entries ent;
    std::string section;
    std::stringstream in(text);
    std::string raw;
    int lineno = 0;

    // Grid and interpolant are rebuilt from their scalar parts after parsing.
    double L = rc.da.grid.L(), frac = rc.da.grid.dealias_fraction();
    int nx = rc.da.grid.nx(), ny = rc.da.grid.ny();
    std::string kind = to_string(rc.da.spec.kind());
    double h = rc.da.spec.h();

    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"physics.nu", [&](const std::string& v) { rc.da.phys.nu = parse_double(v); }},
        {"physics.kappa", [&](const std::string& v) { rc.da.phys.kappa = parse_double(v); }},
        {"grid.L", [&](const std::string& v) { L = parse_double(v); }},
        {"grid.nx", [&](const std::string& v) { nx = parse_int<int>(v); }},
        {"grid.ny", [&](const std::string& v) { ny = parse_int<int>(v); }},
        {"grid.dealias_fraction", [&](const std::string& v) { frac = parse_double(v); }},
        {"interpolant.kind",
         [&](const std::string& v) {
             interpolant_kind_from_string(v);
             kind = v;
         }},
        {"interpolant.h", [&](const std::string& v) { h = parse_double(v); }},
        {"stepper.dt", [&](const std::string& v) { rc.da.stepper.dt = parse_double(v); }},
        {"stepper.scheme", [&](const std::string& v) { rc.da.stepper.scheme = scheme_from_string(v); }},
        {"stepper.cfl_safety", [&](const std::string& v) { rc.da.stepper.cfl_safety = parse_double(v); }},
        {"assimilation.mu", [&](const std::string& v) { rc.da.mu = parse_double(v); }},
        {"assimilation.spinup_T", [&](const std::string& v) { rc.da.spinup_T = parse_double(v); }},
        {"assimilation.run_T", [&](const std::string& v) { rc.da.run_T = parse_double(v); }},
        {"assimilation.seed", [&](const std::string& v) { rc.da.seed = parse_int<std::uint64_t>(v); }},
        {"assimilation.init_amplitude", [&](const std::string& v) { rc.da.init_amplitude = parse_double(v); }},
        {"assimilation.sample_interval", [&](const std::string& v) { rc.da.sample_interval = parse_double(v); }},
        {"assimilation.checkpoint_interval",
         [&](const std::string& v) { rc.da.checkpoint_interval = parse_double(v); }},
        {"assimilation.assim_init", [&](const std::string& v) { rc.da.assim_init = assim_init_from_string(v); }},
        {"assimilation.perturb_amplitude", [&](const std::string& v) { rc.da.perturb_amplitude = parse_double(v); }},
        {"sweep.mu_list", [&](const std::string& v) { rc.sweep.mu_list = parse_list(v); }},
        {"sweep.h_list", [&](const std::string& v) { rc.sweep.h_list = parse_list(v); }},
        {"sweep.parallelism", [&](const std::string& v) { rc.sweep.parallelism = parse_int<int>(v); }},
    };
    static const std::vector<std::string> sections{"physics", "grid", "interpolant", "stepper", "assimilation", "sweep"};

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where(lineno) + "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                throw ConfigError(where(lineno) + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where(lineno) + "expected key = value");
        if (section.empty()) throw ConfigError(where(lineno) + "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string full = section + "." + key;
        auto it = setters.find(full);
        if (it == setters.end()) throw ConfigError(where(lineno) + "unknown key '" + key + "' in [" + section + "]");
        if (ent.kv.count(full)) throw ConfigError(where(lineno) + "duplicate key '" + key + "'");
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            throw ConfigError(where(lineno) + key + ": " + e.what());
        }
        ent.kv[full] = {value, lineno};
    }

    // Invariants, each reported at the line of the key responsible.
    auto check = [&](const std::string& key, const std::function<void()>& f) {
        try {
            f();
        } catch (const ConfigError& e) {
            const auto dot = key.find('.');
            throw ConfigError(where(ent.line_of(key)) + key.substr(dot + 1) + ": " + e.what());
        }
    };
    check("physics.nu", [&] {
        if (!(rc.da.phys.nu > 0.0)) throw ConfigError("must be positive");
    });
    check("physics.kappa", [&] {
        if (!(rc.da.phys.kappa > 0.0)) throw ConfigError("must be positive");
    });
    check("grid.nx", [&] { rc.da.grid = Grid(L, nx, ny, frac); });
    check("interpolant.h", [&] { rc.da.spec = InterpolantSpec(interpolant_kind_from_string(kind), h, L); });
    check("stepper.dt", [&] { rc.da.stepper.validate(); });
    check("interpolant.h", [&] { rc.da.spec.check_grid(rc.da.grid); });
    check(ent.line_of("assimilation.mu") ? "assimilation.mu" : "stepper.dt", [&] { rc.da.validate(); });
    check("sweep.parallelism", [&] {
        if (rc.sweep.parallelism < 1) throw ConfigError("must be at least 1");
    });
    check("sweep.mu_list", [&] {
        for (double m : rc.sweep.mu_list) {
            if (!(m >= 0.0)) throw ConfigError("entries must be nonnegative");
            rc.da.stepper.check_nudging(m);
        }
    });
    check("sweep.h_list", [&] {
        for (double x : rc.sweep.h_list) InterpolantSpec(rc.da.spec.kind(), x, L).check_grid(rc.da.grid);
    });
    return rc;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Canonical text form; parse_config_text(serialize(c)) reproduces c.
inline std::string serialize(const RunConfig& rc) {
    const DAConfig& d = rc.da;
    std::ostringstream o;
    o << "[physics]\n"
      << "nu = " << format_double(d.phys.nu) << "\n"
      << "kappa = " << format_double(d.phys.kappa) << "\n\n"
      << "[grid]\n"
      << "L = " << format_double(d.grid.L()) << "\n"
      << "nx = " << d.grid.nx() << "\n"
      << "ny = " << d.grid.ny() << "\n"
      << "dealias_fraction = " << format_double(d.grid.dealias_fraction()) << "\n\n"
      << "[interpolant]\n"
      << "kind = " << to_string(d.spec.kind()) << "\n"
      << "h = " << format_double(d.spec.h()) << "\n\n"
      << "[stepper]\n"
      << "dt = " << format_double(d.stepper.dt) << "\n"
      << "scheme = " << to_string(d.stepper.scheme) << "\n"
      << "cfl_safety = " << format_double(d.stepper.cfl_safety) << "\n\n"
      << "[assimilation]\n"
      << "mu = " << format_double(d.mu) << "\n"
      << "spinup_T = " << format_double(d.spinup_T) << "\n"
      << "run_T = " << format_double(d.run_T) << "\n"
      << "seed = " << d.seed << "\n"
      << "init_amplitude = " << format_double(d.init_amplitude) << "\n"
      << "sample_interval = " << format_double(d.sample_interval) << "\n"
      << "checkpoint_interval = " << format_double(d.checkpoint_interval) << "\n"
      << "assim_init = " << to_string(d.assim_init) << "\n"
      << "perturb_amplitude = " << format_double(d.perturb_amplitude) << "\n\n"
      << "[sweep]\n"
      << "mu_list = " << detail::join(rc.sweep.mu_list) << "\n"
      << "h_list = " << detail::join(rc.sweep.h_list) << "\n"
      << "parallelism = " << rc.sweep.parallelism << "\n";
    return o.str();
}

}  // namespace bsyn::io
