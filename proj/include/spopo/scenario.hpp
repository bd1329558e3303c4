#pragma once

// Configuration-driven scenario runner.
//
// A run resolves the configuration to oscillator parameters in loss units
// (gamma = 1, tau_s = 1), evaluates the requested spectra on the sideband
// grid for every (order variant, detection mode, phase), and emits
// plot-ready long-format CSV plus a JSON manifest.  Output is deterministic:
// fixed row ordering, fixed %.12g formatting, single-threaded writing.  The
// worker pool only parallelizes the per-frequency computation into
// preallocated slots, so --jobs never reorders a byte.
//
// Every run carries a validity block: a coarse comparison of the 2nd-order
// expansion against the non-perturbative solver, a basis-truncation probe,
// and (when photon-number spectra are requested) a negativity scan.
// Findings are reported as warnings; `strict` escalates them to a nonzero
// exit.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spopo/config.hpp"
#include "spopo/exact.hpp"
#include "spopo/homodyne.hpp"
#include "spopo/modes.hpp"
#include "spopo/pert.hpp"

namespace spopo::scenario {

using nlohmann::json;

struct RunOptions {
    std::vector<std::string> orders{"pert2", "pert4", "exact"};
    int jobs = 1;
    bool strict = false;
};

struct RunResult {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    json manifest;
    int exit_code = 0;
};

namespace detail {

struct Variant {
    std::string name;
    int order = -1;  // expansion order; -1 = non-perturbative solve
};

inline std::vector<Variant> active_variants(const std::vector<std::string>& names) {
    std::vector<Variant> all{{"pert2", 2}, {"pert4", 4}, {"exact", -1}};
    std::vector<Variant> out;
    for (const auto& v : all)
        for (const auto& n : names)
            if (n == v.name) {
                out.push_back(v);
                break;
            }
    if (out.empty())
        throw ConfigError("run: no valid order variant selected");
    return out;
}

inline std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = lo;
        return g;
    }
    for (int i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * double(i) / double(points - 1);
    return g;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double to_db(double s) { return 10.0 * std::log10(std::max(s, 1e-300)); }

// Oscillator parameters in loss units for a given coupling scale.
inline pert::OscillatorParams assemble(const config::Config& cfg, double scale,
                                       int n_modes) {
    const Eigen::MatrixXcd overlap =
        modes::overlap_matrix_analytic(n_modes, 1.0).cast<cplx>();
    const auto cm = modes::build_coupling_model(overlap, scale,
                                                cfg.cavity.detuning);
    Eigen::VectorXd gain = Eigen::VectorXd::Zero(n_modes);
    for (size_t k = 0; k < cfg.pump.ratios.size() && int(k) < n_modes; ++k)
        gain(k) = cfg.pump.ratios[k];
    return pert::from_coupling(gain, Eigen::VectorXd::Ones(n_modes), cm);
}

// Everything needed to print one frequency point of one variant.
struct PointBlock {
    std::vector<homodyne::PhaseQuadratic> quad;  // per detection mode
    std::vector<double> number;                  // per detection mode, optional
};

inline PointBlock compute_point(const pert::OscillatorParams& p, double omega,
                                const Variant& variant,
                                const std::vector<int>& det_modes,
                                bool want_number) {
    PointBlock b;
    b.quad.reserve(det_modes.size());
    if (variant.order < 0) {
        const auto s = exact::solve_pair(p, omega);
        for (int m : det_modes) b.quad.push_back(homodyne::quadratic(s, m));
        if (want_number)
            for (int m : det_modes)
                b.number.push_back(homodyne::number_spectrum(s.plus, m));
    } else {
        const auto t = pert::evaluate(p, omega, variant.order);
        for (int m : det_modes) b.quad.push_back(homodyne::quadratic(t, m));
        if (want_number)
            for (int m : det_modes)
                b.number.push_back(homodyne::number_spectrum(t, m));
    }
    return b;
}

// Fill one slot per (variant, omega) from a small worker pool; slot layout is
// fixed up front so the subsequent serial write is order-independent of the
// thread schedule.
inline std::vector<std::vector<PointBlock>> compute_grid(
    const pert::OscillatorParams& p, const std::vector<double>& grid,
    const std::vector<Variant>& variants, const std::vector<int>& det_modes,
    bool want_number, int jobs) {
    std::vector<std::vector<PointBlock>> slots(variants.size());
    for (auto& s : slots) s.resize(grid.size());

    const size_t total = variants.size() * grid.size();
    std::atomic<size_t> next{0};
    std::mutex error_lock;
    std::exception_ptr error;

    auto worker = [&] {
        for (size_t idx = next.fetch_add(1); idx < total;
             idx = next.fetch_add(1)) {
            try {
                const size_t vi = idx / grid.size();
                const size_t gi = idx % grid.size();
                slots[vi][gi] = compute_point(p, grid[gi], variants[vi],
                                              det_modes, want_number);
            } catch (...) {
                std::lock_guard<std::mutex> hold(error_lock);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(jobs, int(total)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return slots;
}

inline std::vector<double> resolved_phases(const config::PhaseSpec& spec,
                                           const homodyne::PhaseQuadratic& q) {
    switch (spec.kind) {
        case config::PhaseSpec::Kind::list:
            return spec.values;
        case config::PhaseSpec::Kind::grid: {
            std::vector<double> v(spec.grid_points);
            for (int k = 0; k < spec.grid_points; ++k)
                v[k] = k * M_PI / spec.grid_points;
            return v;
        }
        case config::PhaseSpec::Kind::optimal:
        default:
            return {q.phase_independent() ? 0.0 : q.optimal_phase()};
    }
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& body,
                       std::vector<std::string>& files) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("run: cannot write \"" + path.string() + "\"");
    out << body;
    files.push_back(path.string());
}

// Spectra + optional number spectra for one coupling scale; returns the
// squeezing-report rows so on/off variants can share one report file.
inline std::vector<std::string> emit_variant(
    const config::Config& cfg, double scale, const std::string& suffix,
    const RunOptions& opt, const std::vector<Variant>& variants,
    const std::filesystem::path& out_dir, std::vector<std::string>& files) {
    const auto p = assemble(cfg, scale, cfg.modes.n_max);
    const auto grid = linspace(cfg.detection.omega.min, cfg.detection.omega.max,
                               cfg.detection.omega.points);
    const auto& det = cfg.detection.modes;
    const auto slots = compute_grid(p, grid, variants, det,
                                    cfg.output.number_spectra, opt.jobs);

    std::string csv = "omega_over_gamma,S,S_dB,phi,mode,provenance\n";
    for (size_t vi = 0; vi < variants.size(); ++vi)
        for (size_t mi = 0; mi < det.size(); ++mi)
            for (size_t gi = 0; gi < grid.size(); ++gi) {
                const auto& q = slots[vi][gi].quad[mi];
                for (double phi : resolved_phases(cfg.detection.phases, q)) {
                    const double s = q.value(phi);
                    csv += fmt(grid[gi]) + "," + fmt(s) + "," + fmt(to_db(s)) +
                           "," + fmt(phi) + "," + std::to_string(det[mi]) +
                           "," + variants[vi].name + "\n";
                }
            }
    write_file(out_dir / ("spectra" + suffix + ".csv"), csv, files);

    if (cfg.output.number_spectra) {
        std::string ncsv = "omega_over_gamma,N,mode,provenance\n";
        for (size_t vi = 0; vi < variants.size(); ++vi)
            for (size_t mi = 0; mi < det.size(); ++mi)
                for (size_t gi = 0; gi < grid.size(); ++gi)
                    ncsv += fmt(grid[gi]) + "," +
                            fmt(slots[vi][gi].number[mi]) + "," +
                            std::to_string(det[mi]) + "," + variants[vi].name +
                            "\n";
        write_file(out_dir / ("number_spectra" + suffix + ".csv"), ncsv, files);
    }

    std::vector<std::string> report_rows;
    if (cfg.output.squeezing_report) {
        for (const auto& variant : variants) {
            const auto block = compute_point(p, 0.0, variant, det, false);
            for (size_t mi = 0; mi < det.size(); ++mi) {
                const auto r = homodyne::best_squeezing(block.quad[mi], det[mi]);
                report_rows.push_back(std::to_string(det[mi]) + "," +
                                      fmt(scale) + "," + fmt(r.value) + "," +
                                      fmt(r.db) + "," + fmt(r.phase) + "," +
                                      variant.name);
            }
        }
    }
    return report_rows;
}

struct Validity {
    double pert2_vs_exact = 0.0;
    double truncation_shift = 0.0;
    double negative_number_fraction = 0.0;
    double threshold_margin = 1.0;
};

inline Validity check_validity(const config::Config& cfg, double scale) {
    Validity v;
    const auto p = assemble(cfg, scale, cfg.modes.n_max);

    for (double r : cfg.pump.ratios)
        v.threshold_margin = std::min(v.threshold_margin, 1.0 - r);

    const auto probe = linspace(cfg.detection.omega.min,
                                cfg.detection.omega.max,
                                std::min(21, cfg.detection.omega.points));
    size_t negative = 0, samples = 0;
    for (double omega : probe) {
        const auto t = pert::evaluate(p, omega, 2);
        const auto s = exact::solve_pair(p, omega);
        for (int m : cfg.detection.modes) {
            const auto qp = homodyne::quadratic(t, m);
            const auto qe = homodyne::quadratic(s, m);
            for (double phi : {0.0, M_PI / 2.0}) {
                const double se = qe.value(phi);
                v.pert2_vs_exact = std::max(
                    v.pert2_vs_exact, std::abs(qp.value(phi) - se) /
                                          std::max(1.0, std::abs(se)));
            }
            if (cfg.output.number_spectra) {
                ++samples;
                if (homodyne::number_spectrum(t, m) < -1e-9) ++negative;
            }
        }
    }
    if (samples) v.negative_number_fraction = double(negative) / double(samples);

    if (cfg.modes.n_max + 4 <= 64) {
        const int mode = cfg.detection.modes.front();
        const auto small = exact::solve_pair(p, 0.0);
        const auto big = exact::solve_pair(
            assemble(cfg, scale, cfg.modes.n_max + 4), 0.0);
        const double s_small = homodyne::quadratic(small, mode).min_value();
        const double s_big = homodyne::quadratic(big, mode).min_value();
        v.truncation_shift =
            std::abs(s_big - s_small) / std::max(std::abs(s_small), 1e-12);
    }
    return v;
}

}  // namespace detail

inline RunResult run(const config::Config& cfg, const RunOptions& opt,
                     const std::string& out_dir) {
    config::validate(cfg);
    const auto physics = config::resolve_physics(cfg);
    const auto variants = detail::active_variants(opt.orders);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    RunResult result;
    auto report_rows =
        detail::emit_variant(cfg, physics.coupling_scale, "", opt, variants,
                             dir, result.files);
    if (cfg.output.compare_dispersion_off) {
        auto off_rows = detail::emit_variant(cfg, 0.0, "_no_dispersion", opt,
                                             variants, dir, result.files);
        report_rows.insert(report_rows.end(), off_rows.begin(), off_rows.end());
    }
    if (cfg.output.squeezing_report) {
        std::string csv = "mode,coupling_scale,S,S_dB,phi,provenance\n";
        for (const auto& row : report_rows) csv += row + "\n";
        detail::write_file(dir / "squeezing.csv", csv, result.files);
    }

    const auto validity = detail::check_validity(cfg, physics.coupling_scale);
    if (validity.pert2_vs_exact > 0.05)
        result.warnings.push_back(
            "second-order expansion deviates from the non-perturbative solver "
            "by " + detail::fmt(validity.pert2_vs_exact) +
            " (> 0.05) somewhere on the grid; prefer --orders exact there");
    if (validity.truncation_shift > 0.01)
        result.warnings.push_back(
            "retained basis looks too small: four extra modes shift the "
            "squeezing floor by " + detail::fmt(validity.truncation_shift));
    if (validity.negative_number_fraction > 0.0)
        result.warnings.push_back(
            "truncated photon-number spectrum dips below zero on " +
            detail::fmt(100.0 * validity.negative_number_fraction) +
            "% of probed points; the expansion is outside its validity range");

    json manifest;
    manifest["configuration"] = config::to_json(cfg);
    manifest["orders"] = opt.orders;
    manifest["physics"] = {
        {"round_trip_time_s", physics.round_trip_time},
        {"gamma_per_s", physics.gamma},
        {"gamma_over_2pi_hz", physics.gamma / (2.0 * M_PI)},
        {"reflectivity", physics.reflectivity},
        {"coupling_scale", physics.coupling_scale},
        {"round_trips_per_amplitude_efold",
         2.0 / (physics.gamma * physics.round_trip_time)}};
    if (physics.diagnostics) {
        manifest["physics"]["dispersion_s"] = physics.diagnostics->dispersion;
        manifest["physics"]["dispersion_length_mm"] =
            physics.diagnostics->dispersion_length * 1e3;
        manifest["physics"]["n_dispersion"] = physics.diagnostics->n_dispersion;
    }
    manifest["validity"] = {
        {"pert2_vs_exact", validity.pert2_vs_exact},
        {"truncation_shift", validity.truncation_shift},
        {"negative_number_fraction", validity.negative_number_fraction},
        {"threshold_margin", validity.threshold_margin}};
    manifest["warnings"] = result.warnings;
    json names = json::array();
    for (const auto& f : result.files)
        names.push_back(std::filesystem::path(f).filename().string());
    manifest["files"] = names;

    detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n",
                       result.files);
    result.manifest = std::move(manifest);
    result.exit_code = (opt.strict && !result.warnings.empty()) ? 2 : 0;
    return result;
}

inline RunResult run_sweep(const config::Config& base, const std::string& param,
                           const std::vector<double>& values,
                           const RunOptions& opt, const std::string& out_dir) {
    if (values.empty()) throw ConfigError("sweep: need at least one value");
    std::filesystem::create_directories(out_dir);
    RunResult total;
    json index;
    index["param"] = param;
    index["values"] = values;
    json dirs = json::array();
    for (double v : values) {
        const auto cfg = config::apply_sweep(base, param, v);
        const std::string leaf = param + "_" + detail::fmt(v);
        dirs.push_back(leaf);
        auto r = run(cfg, opt, (std::filesystem::path(out_dir) / leaf).string());
        total.files.insert(total.files.end(), r.files.begin(), r.files.end());
        for (auto& w : r.warnings)
            total.warnings.push_back(leaf + ": " + w);
        total.exit_code = std::max(total.exit_code, r.exit_code);
    }
    index["directories"] = dirs;
    index["warnings"] = total.warnings;
    detail::write_file(std::filesystem::path(out_dir) / "sweep.json",
                       index.dump(2) + "\n", total.files);
    total.manifest = std::move(index);
    if (opt.strict && !total.warnings.empty())
        total.exit_code = std::max(total.exit_code, 2);
    return total;
}

}  // namespace spopo::scenario
