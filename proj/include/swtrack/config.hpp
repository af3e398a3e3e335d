#pragma once

#include "swtrack/sim.hpp"

#include <cctype>
#include <map>
#include <set>

namespace swtrack::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

struct Ini {
    std::map<std::string, KeyValues> sections;  // "" holds sectionless keys
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& value, const std::string& key) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": '" + value + "'");
    }
    if (consumed != value.size()) throw ConfigError("bad number for " + key + ": '" + value + "'");
    return v;
}

inline long parse_long(const std::string& value, const std::string& key) {
    std::size_t consumed = 0;
    long v = 0;
    try {
        v = std::stol(value, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": '" + value + "'");
    }
    if (consumed != value.size()) throw ConfigError("bad integer for " + key + ": '" + value + "'");
    return v;
}

inline std::vector<double> parse_numbers(const std::string& value, const std::string& key) {
    std::string normalized = value;
    for (char& c : normalized)
        if (c == ',') c = ' ';
    std::istringstream in(normalized);
    std::vector<double> out;
    double v = 0.0;
    while (in >> v) out.push_back(v);
    std::string rest;
    if (in.fail() && !in.eof() && (in.clear(), in >> rest))
        throw ConfigError("bad number list for " + key + ": '" + value + "'");
    return out;
}

}  // namespace detail

inline Ini parse_ini(std::istream& in, const std::string& origin = "<stream>") {
    Ini ini;
    std::string section;
    ini.sections[section];
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section");
            section = detail::trim(t.substr(1, t.size() - 2));
            ini.sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        ini.sections[section][key] = value;
    }
    return ini;
}

inline Ini parse_ini_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    return parse_ini(in, path.string());
}

/// Motor parameters from exactly the keys
/// L_s, L_r, L_m, R_s, R_r, P, J, b, tau_L, V_DC (all optional; missing keys
/// keep the shipped profile values; unknown keys are rejected).
inline motor::Params parse_motor_params(const KeyValues& kv,
                                        motor::Params base = motor::Params::profile()) {
    for (const auto& [key, value] : kv) {
        if (key == "L_s")
            base.L_s = detail::parse_double(value, key);
        else if (key == "L_r")
            base.L_r = detail::parse_double(value, key);
        else if (key == "L_m")
            base.L_m = detail::parse_double(value, key);
        else if (key == "R_s")
            base.R_s = detail::parse_double(value, key);
        else if (key == "R_r")
            base.R_r = detail::parse_double(value, key);
        else if (key == "P")
            base.P = static_cast<int>(detail::parse_long(value, key));
        else if (key == "J")
            base.J = detail::parse_double(value, key);
        else if (key == "b")
            base.b = detail::parse_double(value, key);
        else if (key == "tau_L")
            base.tau_L = detail::parse_double(value, key);
        else if (key == "V_DC")
            base.V_DC = detail::parse_double(value, key);
        else
            throw ConfigError("unknown motor parameter key: " + key);
    }
    try {
        base.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return base;
}

/// Loads a standalone motor profile: either bare key = value lines or a
/// [motor] section.
inline motor::Params load_motor_profile(const std::filesystem::path& path) {
    const Ini ini = parse_ini_file(path);
    for (const auto& [name, _] : ini.sections) {
        if (!name.empty() && name != "motor")
            throw ConfigError("motor profile " + path.string() + ": unexpected section [" + name + "]");
    }
    KeyValues merged = ini.sections.at("");
    if (auto it = ini.sections.find("motor"); it != ini.sections.end())
        merged.insert(it->second.begin(), it->second.end());
    return parse_motor_params(merged);
}

/// Builds a SimConfig from the [motor], [sim], [spec], [controller] and
/// [initial] sections, all optional, over the default experiment. The DTC
/// comparator bands default to the tracking bands unless overridden.
inline SimConfig sim_config_from_ini(const Ini& ini, const std::string& origin = "<config>") {
    static const std::set<std::string> known = {"", "motor", "sim", "spec", "controller", "initial"};
    for (const auto& [name, kv] : ini.sections) {
        if (!known.count(name)) throw ConfigError(origin + ": unknown section [" + name + "]");
        if (name.empty() && !kv.empty())
            throw ConfigError(origin + ": top-level keys outside a section");
    }

    SimConfig config;
    if (auto it = ini.sections.find("motor"); it != ini.sections.end())
        config.params = parse_motor_params(it->second);

    if (auto it = ini.sections.find("sim"); it != ini.sections.end()) {
        for (const auto& [key, value] : it->second) {
            if (key == "dt")
                config.dt = detail::parse_double(value, key);
            else if (key == "steps")
                config.steps = detail::parse_long(value, key);
            else if (key == "substeps")
                config.substeps = static_cast<int>(detail::parse_long(value, key));
            else
                throw ConfigError("unknown [sim] key: " + key);
        }
    }

    double tau_d = config.spec.target[0], flux_d = config.spec.target[1];
    double eps_tau = config.spec.band[0], eps_flux = config.spec.band[1];
    if (auto it = ini.sections.find("spec"); it != ini.sections.end()) {
        for (const auto& [key, value] : it->second) {
            if (key == "tau_d")
                tau_d = detail::parse_double(value, key);
            else if (key == "flux_d")
                flux_d = detail::parse_double(value, key);
            else if (key == "eps_tau")
                eps_tau = detail::parse_double(value, key);
            else if (key == "eps_flux")
                eps_flux = detail::parse_double(value, key);
            else
                throw ConfigError("unknown [spec] key: " + key);
        }
    }
    Vector target(2), band(2);
    target << tau_d, flux_d;
    band << eps_tau, eps_flux;
    try {
        config.spec = TrackingSpec(target, band);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    config.dtc.torque_band = eps_tau;
    config.dtc.flux_band = eps_flux;

    if (auto it = ini.sections.find("controller"); it != ini.sections.end()) {
        for (const auto& [key, value] : it->second) {
            if (key == "kind") {
                if (value == "minswitch")
                    config.controller = ControllerKind::MinSwitch;
                else if (value == "dtc")
                    config.controller = ControllerKind::Dtc;
                else
                    throw ConfigError("unknown controller kind: " + value);
            } else if (key == "torque_band") {
                config.dtc.torque_band = detail::parse_double(value, key);
            } else if (key == "flux_band") {
                config.dtc.flux_band = detail::parse_double(value, key);
            } else if (key == "table") {
                try {
                    config.dtc.load_table(value);
                } catch (const std::exception& e) {
                    throw ConfigError(e.what());
                }
            } else {
                throw ConfigError("unknown [controller] key: " + key);
            }
        }
    }

    if (auto it = ini.sections.find("initial"); it != ini.sections.end()) {
        for (const auto& [key, value] : it->second) {
            if (key != "state") throw ConfigError("unknown [initial] key: " + key);
            if (value == "auto") {
                config.initial.reset();
            } else {
                const std::vector<double> v = detail::parse_numbers(value, key);
                if (v.size() != 5)
                    throw ConfigError("initial state needs 'auto' or 5 values, got " +
                                      std::to_string(v.size()));
                motor::State s;
                s.omega = v[0];
                s.lambda << v[1], v[2], v[3], v[4];
                config.initial = s;
            }
        }
    }

    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return config;
}

inline SimConfig load_sim_config(const std::filesystem::path& path) {
    return sim_config_from_ini(parse_ini_file(path), path.string());
}

}  // namespace swtrack::config
