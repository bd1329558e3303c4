// Configuration schema: strict parsing, validation messages, physical
// resolution, sweeps, and presets.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "spopo/config.hpp"

using namespace spopo;
using nlohmann::json;

TEST_CASE("empty configuration resolves to the reference defaults") {
    const auto c = config::parse_config(json::object());
    CHECK(c.modes.n_max == 12);
    CHECK(c.pump.ratios == std::vector<double>{0.48, 0.48, 0.48, 0.48, 0.48});
    CHECK(c.detection.omega.points == 401);
    CHECK(c.detection.omega.min == -5.0);
    CHECK(c.detection.omega.max == 5.0);
    CHECK(c.detection.phases.kind == config::PhaseSpec::Kind::optimal);
    CHECK_FALSE(c.dispersion.physical);
    CHECK(c.dispersion.coupling_scale == 0.25);
}

TEST_CASE("unknown keys are rejected with their location") {
    CHECK_THROWS_WITH(config::parse_config({{"cavty", json::object()}}),
                      Catch::Matchers::ContainsSubstring("cavty"));
    CHECK_THROWS_WITH(
        config::parse_config({{"cavity", {{"finesses", 26.0}}}}),
        Catch::Matchers::ContainsSubstring("finesses"));
    CHECK_THROWS_WITH(
        config::parse_config(
            {{"detection", {{"omega", {{"point", 11}}}}}}),
        Catch::Matchers::ContainsSubstring("point"));
}

TEST_CASE("type errors name the offending path") {
    CHECK_THROWS_WITH(
        config::parse_config({{"cavity", {{"finesse", "big"}}}}),
        Catch::Matchers::ContainsSubstring("cavity.finesse"));
    CHECK_THROWS_WITH(
        config::parse_config({{"modes", {{"n_max", 2.5}}}}),
        Catch::Matchers::ContainsSubstring("modes.n_max"));
}

TEST_CASE("at-threshold pump is refused with a threshold message") {
    CHECK_THROWS_WITH(
        config::parse_config({{"pump", {{"ratios", {0.2, 1.0}}}}}),
        Catch::Matchers::ContainsSubstring("threshold"));
}

TEST_CASE("dispersion accepts exactly one specification route") {
    CHECK_THROWS_WITH(
        config::parse_config({{"dispersion",
                               {{"coupling_scale", 0.25},
                                {"k2_fs2_per_mm", 136.0},
                                {"length_mm", 2.0}}}}),
        Catch::Matchers::ContainsSubstring("not both"));
    CHECK_THROWS_WITH(
        config::parse_config({{"dispersion", {{"k2_fs2_per_mm", 136.0}}}}),
        Catch::Matchers::ContainsSubstring("length_mm"));
    const auto c = config::parse_config(
        {{"dispersion", {{"k2_fs2_per_mm", 136.0}, {"length_mm", 2.0}}}});
    CHECK(c.dispersion.physical);
}

TEST_CASE("phase specification takes all three forms") {
    auto opt = config::parse_config({{"detection", {{"phases", "optimal"}}}});
    CHECK(opt.detection.phases.kind == config::PhaseSpec::Kind::optimal);

    auto lst = config::parse_config({{"detection", {{"phases", {0.0, 1.5}}}}});
    CHECK(lst.detection.phases.kind == config::PhaseSpec::Kind::list);
    CHECK(lst.detection.phases.values == std::vector<double>{0.0, 1.5});

    auto grd = config::parse_config(
        {{"detection", {{"phases", {{"grid", 64}}}}}});
    CHECK(grd.detection.phases.kind == config::PhaseSpec::Kind::grid);
    CHECK(grd.detection.phases.grid_points == 64);

    CHECK_THROWS_AS(
        config::parse_config({{"detection", {{"phases", "best"}}}}),
        ConfigError);
    CHECK_THROWS_AS(
        config::parse_config({{"detection", {{"phases", {{"grid", 1}}}}}}),
        ConfigError);
}

TEST_CASE("detection modes must be unique and inside the basis") {
    CHECK_THROWS_WITH(
        config::parse_config({{"detection", {{"modes", {0, 12}}}}}),
        Catch::Matchers::ContainsSubstring("outside the retained basis"));
    CHECK_THROWS_WITH(
        config::parse_config({{"detection", {{"modes", {1, 1}}}}}),
        Catch::Matchers::ContainsSubstring("twice"));
}

TEST_CASE("reference cavity resolves to the published rates") {
    const auto physics = config::resolve_physics(config::preset("reference"));
    CHECK(std::abs(physics.gamma / (2.0 * M_PI) - 3.0e6) < 1e-6 * 3.0e6);
    CHECK(physics.coupling_scale == 0.25);
    const double n_gamma =
        2.0 / (physics.gamma * physics.round_trip_time);
    CHECK(std::lround(n_gamma) == 8);
    CHECK_FALSE(physics.diagnostics.has_value());
}

TEST_CASE("physical dispersion route reproduces the crystal diagnostics") {
    const auto physics =
        config::resolve_physics(config::preset("reference-physical"));
    REQUIRE(physics.diagnostics.has_value());
    CHECK(std::abs(physics.diagnostics->dispersion_length * 1e3 - 33.0) < 0.1);
    CHECK(std::lround(physics.diagnostics->n_dispersion) == 17);
    const double ratio = 2.0 / (physics.gamma * physics.round_trip_time) /
                         physics.diagnostics->n_dispersion;
    CHECK(std::abs(ratio - 0.5) < 0.05);
    CHECK(physics.coupling_scale > 0.0);
}

TEST_CASE("sweep parameters scale or replace the intended fields") {
    const auto base = config::preset("reference");

    CHECK(config::apply_sweep(base, "D", 0.5).dispersion.coupling_scale ==
          0.125);
    CHECK(config::apply_sweep(base, "lambda", 0.5).pump.ratios[0] == 0.24);
    CHECK(config::apply_sweep(base, "n_max", 16).modes.n_max == 16);
    const auto wide = config::apply_sweep(base, "omega_max", 8.0);
    CHECK(wide.detection.omega.min == -8.0);
    CHECK(wide.detection.omega.max == 8.0);
    const auto fixed_phi = config::apply_sweep(base, "phi", 0.3);
    CHECK(fixed_phi.detection.phases.kind == config::PhaseSpec::Kind::list);
    CHECK(fixed_phi.detection.phases.values == std::vector<double>{0.3});

    const auto physical = config::preset("reference-physical");
    CHECK(config::apply_sweep(physical, "D", 2.0).dispersion.length_mm == 4.0);

    CHECK_THROWS_WITH(config::apply_sweep(base, "lambda", 2.5),
                      Catch::Matchers::ContainsSubstring("threshold"));
    CHECK_THROWS_WITH(config::apply_sweep(base, "coupling", 1.0),
                      Catch::Matchers::ContainsSubstring("unknown parameter"));
}

TEST_CASE("presets are unique, valid, and round-trip through JSON") {
    std::set<std::string> names;
    for (const auto& p : config::presets()) {
        CHECK(names.insert(p.name).second);
        CHECK_FALSE(p.description.empty());
        CHECK_NOTHROW(config::validate(p.config));
        const auto echo = config::parse_config(config::to_json(p.config));
        CHECK(config::to_json(echo) == config::to_json(p.config));
    }
    CHECK(names.count("reference") == 1);
    CHECK_THROWS_WITH(config::preset("nonesuch"),
                      Catch::Matchers::ContainsSubstring("available"));
}

TEST_CASE("file loading distinguishes missing files from broken JSON") {
    CHECK_THROWS_WITH(config::load_config("/nonexistent/path.json"),
                      Catch::Matchers::ContainsSubstring("cannot open"));
    const std::string path = "test_config_broken.json";
    {
        std::ofstream out(path);
        out << "{ this is not json";
    }
    CHECK_THROWS_WITH(config::load_config(path),
                      Catch::Matchers::ContainsSubstring("not valid JSON"));
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << R"({"pump": {"ratios": [0.17]}, "detection": {"modes": [0]}})";
    }
    const auto c = config::load_config(path);
    CHECK(c.pump.ratios == std::vector<double>{0.17});
    std::remove(path.c_str());
}
