// Command-line front end: scenario runs, parameter sweeps, configuration
// validation, and preset listing.  Exit codes: 0 success, 1 configuration
// error, 2 numerical failure or validity warning under --strict.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spopo/config.hpp"
#include "spopo/scenario.hpp"

namespace {

// A scenario argument is either a JSON file on disk or a preset name.
spopo::config::Config load_scenario(const std::string& arg) {
    if (std::filesystem::exists(arg)) return spopo::config::load_config(arg);
    return spopo::config::preset(arg);
}

std::vector<std::string> orders_from_flag(const std::string& flag) {
    if (flag == "all") return {"pert2", "pert4", "exact"};
    if (flag == "pert2" || flag == "pert4" || flag == "exact") return {flag};
    throw spopo::ConfigError(
        "run: --orders must be one of pert2|pert4|exact|all, got \"" + flag +
        "\"");
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= csv.size()) {
        const size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw spopo::ConfigError("sweep: \"" + tok +
                                     "\" in --values is not a number");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty())
        throw spopo::ConfigError("sweep: --values must list at least one number");
    return out;
}

void print_summary(const spopo::config::Config& cfg) {
    const auto physics = spopo::config::resolve_physics(cfg);
    std::printf("configuration valid\n");
    std::printf("  modes: %d retained supermodes, tau_s = %g fs\n",
                cfg.modes.n_max, cfg.modes.tau_s_fs);
    double max_ratio = 0;
    for (double r : cfg.pump.ratios) max_ratio = std::max(max_ratio, r);
    std::printf("  pump: %zu pumped modes, max lambda/gamma = %g\n",
                cfg.pump.ratios.size(), max_ratio);
    std::printf("  cavity: gamma/2pi = %g MHz, %g round trips per amplitude "
                "e-fold\n",
                physics.gamma / (2.0 * M_PI) * 1e-6,
                2.0 / (physics.gamma * physics.round_trip_time));
    std::printf("  coupling scale: %g\n", physics.coupling_scale);
    if (physics.diagnostics) {
        std::printf("  dispersion length: %g mm (%g crystal lengths)\n",
                    physics.diagnostics->dispersion_length * 1e3,
                    physics.diagnostics->n_dispersion);
    }
}

void print_outcome(const spopo::scenario::RunResult& result) {
    for (const auto& w : result.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    for (const auto& f : result.files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimode squeezing spectra of a synchronously pumped "
                 "optical parametric oscillator with intracavity dispersion"};
    app.require_subcommand(1);

    std::string scenario_arg, out_dir = "out", orders_flag = "all";
    std::string sweep_param, sweep_values;
    int jobs = 1;
    bool strict = false;

    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("config", scenario_arg,
                        "configuration file or preset name")
            ->required();
        cmd->add_option("--out", out_dir, "output directory (default: out)");
        cmd->add_option("--orders", orders_flag,
                        "order variants: pert2|pert4|exact|all");
        cmd->add_option("--jobs", jobs, "worker threads (default: 1)")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--strict", strict,
                      "treat validity warnings as errors (exit 2)");
    };

    auto* run_cmd = app.add_subcommand("run", "evaluate one scenario");
    add_run_flags(run_cmd);

    auto* sweep_cmd =
        app.add_subcommand("sweep", "evaluate a scenario across one parameter");
    add_run_flags(sweep_cmd);
    sweep_cmd->add_option("--param", sweep_param,
                          "swept parameter: D, lambda, n_max, omega_max, phi")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")
        ->required();

    auto* validate_cmd =
        app.add_subcommand("validate", "check a configuration and report "
                                       "derived quantities");
    validate_cmd->add_option("config", scenario_arg,
                             "configuration file or preset name")
        ->required();

    auto* presets_cmd = app.add_subcommand("presets", "preset operations");
    presets_cmd->require_subcommand(1);
    presets_cmd->add_subcommand("list", "list available presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets_cmd->parsed()) {
            for (const auto& p : spopo::config::presets())
                std::printf("%-20s %s\n", p.name.c_str(), p.description.c_str());
            return 0;
        }
        if (validate_cmd->parsed()) {
            print_summary(load_scenario(scenario_arg));
            return 0;
        }
        spopo::scenario::RunOptions opt;
        opt.orders = orders_from_flag(orders_flag);
        opt.jobs = jobs;
        opt.strict = strict;
        const auto cfg = load_scenario(scenario_arg);
        const auto result =
            sweep_cmd->parsed()
                ? spopo::scenario::run_sweep(cfg, sweep_param,
                                             parse_values(sweep_values), opt,
                                             out_dir)
                : spopo::scenario::run(cfg, opt, out_dir);
        print_outcome(result);
        return result.exit_code;
    } catch (const spopo::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    }
}
