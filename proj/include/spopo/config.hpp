#pragma once

// Scenario configuration: schema, strict parsing, physical-parameter
// resolution, sweep application, and named presets.
//
// Configurations are JSON with six optional sections
//
//   cavity     { rep_rate_hz, finesse, detuning, reflectivity }
//   dispersion { coupling_scale }  or  { k2_fs2_per_mm, length_mm }
//   modes      { n_max, tau_s_fs }
//   pump       { ratios }
//   detection  { modes, phases, omega { min, max, points } }
//   output     { number_spectra, compare_dispersion_off, squeezing_report }
//
// Unknown keys anywhere are hard errors: a silently ignored typo in a physics
// parameter is worse than a refused file.  All rates are expressed in units
// of the fundamental-mode loss gamma; the physical dispersion route converts
// k2 and crystal length into the dimensionless coupling scale
// D / (gamma tau_s^2) using the cavity round-trip time and finesse.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <Eigen/Dense>

#include "spopo/core.hpp"
#include "spopo/modes.hpp"

namespace spopo::config {

using nlohmann::json;

struct CavityConfig {
    double rep_rate_hz = 78.0e6;
    double finesse = 26.0;
    double detuning = 0.0;                // units of gamma
    std::optional<double> reflectivity;   // default: implied by the finesse
};

struct DispersionConfig {
    bool physical = false;
    double coupling_scale = 0.25;  // D / (gamma tau_s^2)
    double k2_fs2_per_mm = 0.0;
    double length_mm = 0.0;
};

struct ModesConfig {
    int n_max = 12;          // number of retained supermodes, orders 0..n_max-1
    double tau_s_fs = 67.0;  // fundamental mode duration
};

struct PumpConfig {
    std::vector<double> ratios{0.48, 0.48, 0.48, 0.48, 0.48};  // lambda_n/gamma
};

struct OmegaGrid {
    double min = -5.0;
    double max = 5.0;
    int points = 401;
};

struct PhaseSpec {
    enum class Kind { optimal, list, grid };
    Kind kind = Kind::optimal;
    std::vector<double> values;  // kind == list
    int grid_points = 0;         // kind == grid: k pi / grid_points, k < grid_points
};

struct DetectionConfig {
    std::vector<int> modes{0, 1, 2, 3, 4};
    PhaseSpec phases;
    OmegaGrid omega;
};

struct OutputConfig {
    bool number_spectra = false;
    bool compare_dispersion_off = false;
    bool squeezing_report = true;
};

struct Config {
    CavityConfig cavity;
    DispersionConfig dispersion;
    ModesConfig modes;
    PumpConfig pump;
    DetectionConfig detection;
    OutputConfig output;
};

namespace detail {

inline void expect_keys(const json& j, const std::string& where,
                        std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError("config: " + where + " must be an object");
    for (const auto& item : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }))
            throw ConfigError("config: unknown key \"" + item.key() + "\" in " +
                              where);
    }
}

inline double num(const json& j, const std::string& path) {
    if (!j.is_number())
        throw ConfigError("config: " + path + " must be a number");
    return j.get<double>();
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        throw ConfigError("config: " + path + " must be an integer");
    return j.get<int>();
}

inline bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean())
        throw ConfigError("config: " + path + " must be true or false");
    return j.get<bool>();
}

}  // namespace detail

inline void validate(const Config& c) {
    if (c.cavity.rep_rate_hz <= 0)
        throw ConfigError("config: cavity.rep_rate_hz must be > 0");
    if (c.cavity.finesse <= M_PI)
        throw ConfigError("config: cavity.finesse must exceed pi");
    if (c.cavity.reflectivity &&
        (*c.cavity.reflectivity <= 0 || *c.cavity.reflectivity > 1))
        throw ConfigError("config: cavity.reflectivity must be in (0, 1]");
    if (c.dispersion.physical &&
        (c.dispersion.k2_fs2_per_mm <= 0 || c.dispersion.length_mm <= 0))
        throw ConfigError(
            "config: dispersion.k2_fs2_per_mm and length_mm must be > 0");
    if (!c.dispersion.physical && c.dispersion.coupling_scale < 0)
        throw ConfigError("config: dispersion.coupling_scale must be >= 0");
    if (c.modes.n_max < 1 || c.modes.n_max > 64)
        throw ConfigError("config: modes.n_max must be in [1, 64]");
    if (c.modes.tau_s_fs <= 0)
        throw ConfigError("config: modes.tau_s_fs must be > 0");
    if (c.pump.ratios.empty())
        throw ConfigError("config: pump.ratios must not be empty");
    if (int(c.pump.ratios.size()) > c.modes.n_max)
        throw ConfigError("config: more pump ratios than retained modes");
    for (size_t k = 0; k < c.pump.ratios.size(); ++k) {
        const double r = c.pump.ratios[k];
        if (r < 0)
            throw ConfigError("config: pump.ratios[" + std::to_string(k) +
                              "] must be >= 0");
        if (r >= 1)
            throw ConfigError(
                "config: pump.ratios[" + std::to_string(k) + "] = " +
                std::to_string(r) +
                " is at or above threshold (lambda/gamma >= 1); the "
                "below-threshold model cannot run there");
    }
    if (c.detection.modes.empty())
        throw ConfigError("config: detection.modes must not be empty");
    std::set<int> seen;
    for (int m : c.detection.modes) {
        if (m < 0 || m >= c.modes.n_max)
            throw ConfigError("config: detection mode " + std::to_string(m) +
                              " outside the retained basis of " +
                              std::to_string(c.modes.n_max) + " modes");
        if (!seen.insert(m).second)
            throw ConfigError("config: detection mode " + std::to_string(m) +
                              " listed twice");
    }
    const auto& g = c.detection.omega;
    if (g.points < 1)
        throw ConfigError("config: detection.omega.points must be >= 1");
    if (g.points == 1 ? g.max < g.min : g.max <= g.min)
        throw ConfigError("config: detection.omega range must have max > min");
    if (c.detection.phases.kind == PhaseSpec::Kind::list) {
        if (c.detection.phases.values.empty())
            throw ConfigError("config: detection.phases list must not be empty");
        for (double v : c.detection.phases.values)
            if (!std::isfinite(v))
                throw ConfigError("config: detection.phases entries must be finite");
    }
    if (c.detection.phases.kind == PhaseSpec::Kind::grid &&
        c.detection.phases.grid_points < 2)
        throw ConfigError("config: detection.phases.grid must be >= 2");
}

inline Config parse_config(const json& j) {
    Config c;
    detail::expect_keys(j, "the top level",
                        {"cavity", "dispersion", "modes", "pump", "detection",
                         "output"});
    if (j.contains("cavity")) {
        const auto& s = j.at("cavity");
        detail::expect_keys(s, "cavity",
                            {"rep_rate_hz", "finesse", "detuning", "reflectivity"});
        if (s.contains("rep_rate_hz"))
            c.cavity.rep_rate_hz = detail::num(s.at("rep_rate_hz"), "cavity.rep_rate_hz");
        if (s.contains("finesse"))
            c.cavity.finesse = detail::num(s.at("finesse"), "cavity.finesse");
        if (s.contains("detuning"))
            c.cavity.detuning = detail::num(s.at("detuning"), "cavity.detuning");
        if (s.contains("reflectivity"))
            c.cavity.reflectivity =
                detail::num(s.at("reflectivity"), "cavity.reflectivity");
    }
    if (j.contains("dispersion")) {
        const auto& s = j.at("dispersion");
        detail::expect_keys(s, "dispersion",
                            {"coupling_scale", "k2_fs2_per_mm", "length_mm"});
        const bool direct = s.contains("coupling_scale");
        const bool physical = s.contains("k2_fs2_per_mm") || s.contains("length_mm");
        if (direct && physical)
            throw ConfigError(
                "config: dispersion takes either coupling_scale or the "
                "physical pair k2_fs2_per_mm + length_mm, not both");
        if (physical) {
            if (!s.contains("k2_fs2_per_mm") || !s.contains("length_mm"))
                throw ConfigError(
                    "config: physical dispersion needs both k2_fs2_per_mm "
                    "and length_mm");
            c.dispersion.physical = true;
            c.dispersion.k2_fs2_per_mm =
                detail::num(s.at("k2_fs2_per_mm"), "dispersion.k2_fs2_per_mm");
            c.dispersion.length_mm =
                detail::num(s.at("length_mm"), "dispersion.length_mm");
        } else if (direct) {
            c.dispersion.coupling_scale =
                detail::num(s.at("coupling_scale"), "dispersion.coupling_scale");
        }
    }
    if (j.contains("modes")) {
        const auto& s = j.at("modes");
        detail::expect_keys(s, "modes", {"n_max", "tau_s_fs"});
        if (s.contains("n_max"))
            c.modes.n_max = detail::integer(s.at("n_max"), "modes.n_max");
        if (s.contains("tau_s_fs"))
            c.modes.tau_s_fs = detail::num(s.at("tau_s_fs"), "modes.tau_s_fs");
    }
    if (j.contains("pump")) {
        const auto& s = j.at("pump");
        detail::expect_keys(s, "pump", {"ratios"});
        if (s.contains("ratios")) {
            if (!s.at("ratios").is_array())
                throw ConfigError("config: pump.ratios must be an array");
            c.pump.ratios.clear();
            for (const auto& v : s.at("ratios"))
                c.pump.ratios.push_back(detail::num(v, "pump.ratios entry"));
        }
    }
    if (j.contains("detection")) {
        const auto& s = j.at("detection");
        detail::expect_keys(s, "detection", {"modes", "phases", "omega"});
        if (s.contains("modes")) {
            if (!s.at("modes").is_array())
                throw ConfigError("config: detection.modes must be an array");
            c.detection.modes.clear();
            for (const auto& v : s.at("modes"))
                c.detection.modes.push_back(
                    detail::integer(v, "detection.modes entry"));
        }
        if (s.contains("phases")) {
            const auto& ph = s.at("phases");
            if (ph.is_string()) {
                if (ph.get<std::string>() != "optimal")
                    throw ConfigError(
                        "config: detection.phases string form must be \"optimal\"");
                c.detection.phases.kind = PhaseSpec::Kind::optimal;
            } else if (ph.is_array()) {
                c.detection.phases.kind = PhaseSpec::Kind::list;
                c.detection.phases.values.clear();
                for (const auto& v : ph)
                    c.detection.phases.values.push_back(
                        detail::num(v, "detection.phases entry"));
            } else if (ph.is_object()) {
                detail::expect_keys(ph, "detection.phases", {"grid"});
                if (!ph.contains("grid"))
                    throw ConfigError("config: detection.phases object needs \"grid\"");
                c.detection.phases.kind = PhaseSpec::Kind::grid;
                c.detection.phases.grid_points =
                    detail::integer(ph.at("grid"), "detection.phases.grid");
            } else {
                throw ConfigError(
                    "config: detection.phases must be \"optimal\", a list, or "
                    "{\"grid\": n}");
            }
        }
        if (s.contains("omega")) {
            const auto& g = s.at("omega");
            detail::expect_keys(g, "detection.omega", {"min", "max", "points"});
            if (g.contains("min"))
                c.detection.omega.min = detail::num(g.at("min"), "detection.omega.min");
            if (g.contains("max"))
                c.detection.omega.max = detail::num(g.at("max"), "detection.omega.max");
            if (g.contains("points"))
                c.detection.omega.points =
                    detail::integer(g.at("points"), "detection.omega.points");
        }
    }
    if (j.contains("output")) {
        const auto& s = j.at("output");
        detail::expect_keys(s, "output",
                            {"number_spectra", "compare_dispersion_off",
                             "squeezing_report"});
        if (s.contains("number_spectra"))
            c.output.number_spectra =
                detail::boolean(s.at("number_spectra"), "output.number_spectra");
        if (s.contains("compare_dispersion_off"))
            c.output.compare_dispersion_off = detail::boolean(
                s.at("compare_dispersion_off"), "output.compare_dispersion_off");
        if (s.contains("squeezing_report"))
            c.output.squeezing_report = detail::boolean(
                s.at("squeezing_report"), "output.squeezing_report");
    }
    validate(c);
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: \"" + path + "\" is not valid JSON: " +
                          e.what());
    }
    return parse_config(j);
}

// Canonical JSON echo of a configuration (used by manifests).
inline json to_json(const Config& c) {
    json j;
    j["cavity"] = {{"rep_rate_hz", c.cavity.rep_rate_hz},
                   {"finesse", c.cavity.finesse},
                   {"detuning", c.cavity.detuning}};
    if (c.cavity.reflectivity)
        j["cavity"]["reflectivity"] = *c.cavity.reflectivity;
    if (c.dispersion.physical)
        j["dispersion"] = {{"k2_fs2_per_mm", c.dispersion.k2_fs2_per_mm},
                           {"length_mm", c.dispersion.length_mm}};
    else
        j["dispersion"] = {{"coupling_scale", c.dispersion.coupling_scale}};
    j["modes"] = {{"n_max", c.modes.n_max}, {"tau_s_fs", c.modes.tau_s_fs}};
    j["pump"] = {{"ratios", c.pump.ratios}};
    j["detection"]["modes"] = c.detection.modes;
    switch (c.detection.phases.kind) {
        case PhaseSpec::Kind::optimal:
            j["detection"]["phases"] = "optimal";
            break;
        case PhaseSpec::Kind::list:
            j["detection"]["phases"] = c.detection.phases.values;
            break;
        case PhaseSpec::Kind::grid:
            j["detection"]["phases"] = {{"grid", c.detection.phases.grid_points}};
            break;
    }
    j["detection"]["omega"] = {{"min", c.detection.omega.min},
                               {"max", c.detection.omega.max},
                               {"points", c.detection.omega.points}};
    j["output"] = {{"number_spectra", c.output.number_spectra},
                   {"compare_dispersion_off", c.output.compare_dispersion_off},
                   {"squeezing_report", c.output.squeezing_report}};
    return j;
}

// Cavity quantities implied by a configuration; the coupling scale is the
// single number the oscillator model consumes.
struct ResolvedPhysics {
    double round_trip_time = 0.0;  // s
    double gamma = 0.0;            // s^-1
    double reflectivity = 0.0;
    double coupling_scale = 0.0;   // D / (gamma tau_s^2)
    std::optional<modes::DispersionDiagnostics> diagnostics;
};

inline ResolvedPhysics resolve_physics(const Config& c) {
    validate(c);
    ResolvedPhysics r;
    r.round_trip_time = 1.0 / c.cavity.rep_rate_hz;
    r.gamma = modes::gamma_from_finesse(c.cavity.finesse, r.round_trip_time);
    r.reflectivity = c.cavity.reflectivity
                         ? *c.cavity.reflectivity
                         : modes::reflectivity_from_finesse(c.cavity.finesse);
    if (c.dispersion.physical) {
        const double k2 = c.dispersion.k2_fs2_per_mm * 1e-27;  // s^2/m
        const double length = c.dispersion.length_mm * 1e-3;   // m
        const double tau = c.modes.tau_s_fs * 1e-15;           // s
        r.diagnostics = modes::dispersion_diagnostics(
            k2, length, r.round_trip_time, r.reflectivity, r.gamma, tau);
        r.coupling_scale = r.diagnostics->coupling_scale;
    } else {
        r.coupling_scale = c.dispersion.coupling_scale;
    }
    return r;
}

// --- presets ---------------------------------------------------------------

struct Preset {
    std::string name;
    std::string description;
    Config config;
};

inline std::vector<Preset> presets() {
    std::vector<Preset> list;

    Config reference;  // the defaults are the reference configuration
    list.push_back(
        {"reference",
         "five supermodes pumped at 0.48 with dispersion coupling scale 0.25",
         reference});

    Config physical = reference;
    physical.dispersion = DispersionConfig{};
    physical.dispersion.physical = true;
    physical.dispersion.k2_fs2_per_mm = 136.0;
    physical.dispersion.length_mm = 2.0;
    list.push_back(
        {"reference-physical",
         "same cavity with the coupling derived from k2 = 136 fs^2/mm over "
         "2 mm at tau_s = 67 fs",
         physical});

    Config single = reference;
    single.pump.ratios = {0.48};
    single.detection.modes = {0, 2};
    single.output.compare_dispersion_off = true;
    list.push_back(
        {"pump-series-single",
         "fundamental mode pumped alone, detected on modes 0 and 2 with a "
         "dispersion-free twin; sweep lambda over 0.354,0.688,1.0 for the "
         "3/6/9 dB series",
         single});

    Config multi = reference;
    multi.detection.modes = {0, 2};
    multi.output.compare_dispersion_off = true;
    list.push_back(
        {"pump-series-multi",
         "five modes pumped at 0.48, detected on modes 0 and 2 with a "
         "dispersion-free twin",
         multi});

    Config phase_map = reference;
    phase_map.detection.modes = {0, 2};
    phase_map.detection.phases.kind = PhaseSpec::Kind::grid;
    phase_map.detection.phases.grid_points = 64;
    phase_map.output.squeezing_report = false;
    list.push_back(
        {"phase-map",
         "photocurrent spectrum on a 64-point local-oscillator phase grid "
         "for modes 0 and 2",
         phase_map});

    Config bars = reference;
    bars.output.compare_dispersion_off = true;
    list.push_back(
        {"mode-comparison",
         "per-mode best squeezing and optimal phase at zero sideband "
         "frequency, with and without dispersion",
         bars});

    Config order_check = reference;
    order_check.pump.ratios = {0.48};
    order_check.detection.modes = {0};
    order_check.output.number_spectra = true;
    order_check.output.squeezing_report = false;
    list.push_back(
        {"order-check",
         "photon-number spectra of the fundamental mode for truncation "
         "diagnostics; sweep D over 0.1,0.5,1,2 to watch the orders diverge",
         order_check});

    return list;
}

inline Config preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p.config;
    std::string names;
    for (const auto& p : presets()) names += " " + p.name;
    throw ConfigError("config: unknown preset \"" + name + "\"; available:" +
                      names);
}

// --- sweeps ----------------------------------------------------------------

// D and lambda sweep multiplicatively (value = factor on the configured
// magnitude); n_max, omega_max, and phi set absolute values.
inline Config apply_sweep(const Config& base, const std::string& param,
                          double value) {
    Config c = base;
    if (param == "D") {
        if (value < 0) throw ConfigError("sweep: D factor must be >= 0");
        if (c.dispersion.physical) {
            c.dispersion.length_mm *= value;
            if (value == 0.0) {  // a zero-length crystal is no dispersion at all
                c.dispersion = DispersionConfig{};
                c.dispersion.coupling_scale = 0.0;
            }
        } else {
            c.dispersion.coupling_scale *= value;
        }
    } else if (param == "lambda") {
        if (value < 0) throw ConfigError("sweep: lambda factor must be >= 0");
        for (double& r : c.pump.ratios) r *= value;
    } else if (param == "n_max") {
        c.modes.n_max = int(std::lround(value));
    } else if (param == "omega_max") {
        if (value <= 0) throw ConfigError("sweep: omega_max must be > 0");
        c.detection.omega.min = -value;
        c.detection.omega.max = value;
    } else if (param == "phi") {
        c.detection.phases.kind = PhaseSpec::Kind::list;
        c.detection.phases.values = {value};
        c.detection.phases.grid_points = 0;
    } else {
        throw ConfigError("sweep: unknown parameter \"" + param +
                          "\"; choose from D, lambda, n_max, omega_max, phi");
    }
    validate(c);
    return c;
}

}  // namespace spopo::config
