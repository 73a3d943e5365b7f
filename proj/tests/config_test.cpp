#include <string>

#include "doctest.h"
#include "nilm/config.hpp"
#include "nilm/errors.hpp"
#include "test_util.hpp"

using nilm_test::TempDir;
using nilm_test::write_text;

namespace {

std::string error_message(const std::string& json) {
    try {
        nilm::parse_pipeline_config(json);
    } catch (const nilm::ConfigError& e) {
        return e.what();
    } catch (const nilm::ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("an empty configuration yields the shipped defaults") {
    const auto config = nilm::parse_pipeline_config("{}");
    CHECK(config.filter.median_window == 31);
    CHECK(config.filter.smoothing == nilm::Smoothing::none);
    CHECK(config.filter.smoothing_window == 5);
    CHECK(config.edges.ma_window == 5);
    CHECK(config.edges.edge_threshold == 30.0);
    CHECK(config.edges.pair_tolerance_watts == 20.0);
    CHECK(config.edges.pair_tolerance_fraction == 0.10);
    CHECK(config.edges.window_length == 86400);
    CHECK(config.cluster.min_support == 2);
    CHECK(config.cluster.gap_bins == 2);
    CHECK(config.db.merge_threshold == 50.0);
    CHECK(config.db.prune_min_total_appearances == 3);
    CHECK(config.db.prune_stale_days == 7);
    CHECK(config.db.ema_weight == 0.3);
    CHECK(config.db.default_stay_prob == 0.99);
    CHECK(config.pf.particle_count == 1000);
    CHECK(config.pf.observation_noise_stddev == 25.0);
    CHECK(config.pf.resample_threshold == 0.5);
    CHECK(config.pf.decision_threshold == 0.5);
    CHECK(config.pf.rng_seed == 0);
}

TEST_CASE("every field can be overridden") {
    const auto config = nilm::parse_pipeline_config(R"({
        "filter": {"median_window": 15, "smoothing": "moving_average", "smoothing_window": 7},
        "edges": {"ma_window": 3, "edge_threshold_w": 45.5, "pair_tolerance_w": 10,
                  "pair_tolerance_fraction": 0.2, "window_length_s": 43200},
        "cluster": {"min_support": 3, "gap_bins": 4},
        "db": {"merge_threshold_w": 60, "prune_min_total_appearances": 5,
               "prune_stale_days": 14, "ema_weight": 0.5, "default_stay_prob": 0.995},
        "pf": {"particle_count": 500, "observation_noise_stddev_w": 30,
               "resample_threshold": 0.6, "decision_threshold": 0.7, "rng_seed": 123}
    })");
    CHECK(config.filter.median_window == 15);
    CHECK(config.filter.smoothing == nilm::Smoothing::moving_average);
    CHECK(config.filter.smoothing_window == 7);
    CHECK(config.edges.ma_window == 3);
    CHECK(config.edges.edge_threshold == 45.5);
    CHECK(config.edges.pair_tolerance_watts == 10.0);
    CHECK(config.edges.pair_tolerance_fraction == 0.2);
    CHECK(config.edges.window_length == 43200);
    CHECK(config.cluster.min_support == 3);
    CHECK(config.cluster.gap_bins == 4);
    CHECK(config.db.merge_threshold == 60.0);
    CHECK(config.db.prune_min_total_appearances == 5);
    CHECK(config.db.prune_stale_days == 14);
    CHECK(config.db.ema_weight == 0.5);
    CHECK(config.db.default_stay_prob == 0.995);
    CHECK(config.pf.particle_count == 500);
    CHECK(config.pf.observation_noise_stddev == 30.0);
    CHECK(config.pf.resample_threshold == 0.6);
    CHECK(config.pf.decision_threshold == 0.7);
    CHECK(config.pf.rng_seed == 123);
}

TEST_CASE("unknown keys are rejected with their full path") {
    CHECK(error_message(R"({"pf": {"particles": 1}})").find("pf.particles") !=
          std::string::npos);
    CHECK(error_message(R"({"speed": 9})").find("speed") != std::string::npos);
    CHECK(error_message(R"({"filter": {"median": 31}})").find("filter.median") !=
          std::string::npos);
}

TEST_CASE("out-of-range values are rejected") {
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"filter": {"median_window": 30}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"filter": {"smoothing": "mean"}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"edges": {"edge_threshold_w": 0}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"edges": {"window_length_s": 1000}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"db": {"ema_weight": 0}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"db": {"default_stay_prob": 1}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"pf": {"particle_count": 0}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"pf": {"decision_threshold": 1}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"pf": {"resample_threshold": 1.5}})"),
                    nilm::ConfigError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config(R"({"cluster": {"min_support": 0}})"),
                    nilm::ConfigError);
}

TEST_CASE("malformed json is a parse error") {
    CHECK_THROWS_AS(nilm::parse_pipeline_config("{"), nilm::ParseError);
    CHECK_THROWS_AS(nilm::parse_pipeline_config("[]"), nilm::ConfigError);
}

TEST_CASE("config files load from disk") {
    TempDir dir;
    write_text(dir.file("config.json"), R"({"pf": {"rng_seed": 7}})");
    const auto config = nilm::load_pipeline_config(dir.file("config.json"));
    CHECK(config.pf.rng_seed == 7);
    CHECK_THROWS_AS(nilm::load_pipeline_config(dir.file("missing.json")), nilm::InputError);
}

TEST_CASE("appliance specs parse with defaults and validation") {
    const auto specs = nilm::parse_appliance_specs(R"({
        "appliances": [
            {"label": "fridge", "on_power_w": 120},
            {"label": "oven", "on_power_w": 2400, "mean_on_duration_s": 1800,
             "activations_per_day": 2.5, "noise_stddev_w": 6}
        ]
    })");
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].label == "fridge");
    CHECK(specs[0].on_power == 120.0);
    CHECK(specs[0].mean_on_duration == 600.0);
    CHECK(specs[0].activations_per_day == 1.0);
    CHECK(specs[0].noise_stddev == 0.0);
    CHECK(specs[1].mean_on_duration == 1800.0);
    CHECK(specs[1].activations_per_day == 2.5);

    CHECK_THROWS_AS(nilm::parse_appliance_specs(R"({"appliances": []})"), nilm::ConfigError);
    try {
        nilm::parse_appliance_specs(R"({"appliances": [{"on_power_w": 100}]})");
        CHECK(false);
    } catch (const nilm::ConfigError& e) {
        CHECK(std::string(e.what()).find("appliances[0]") != std::string::npos);
    }
    CHECK_THROWS_AS(
        nilm::parse_appliance_specs(R"({"appliances": [{"label": "x", "on_power_w": -5}]})"),
        nilm::ConfigError);
    CHECK_THROWS_AS(
        nilm::parse_appliance_specs(
            R"({"appliances": [{"label": "x", "on_power_w": 100, "color": "red"}]})"),
        nilm::ConfigError);
}

TEST_CASE("reference state files hold one positive wattage per line") {
    TempDir dir;
    write_text(dir.file("refs.txt"), "# levels\n100\n200.5\n\n390\n");
    const auto refs = nilm::load_reference_states(dir.file("refs.txt"));
    CHECK(refs == std::vector<double>{100.0, 200.5, 390.0});

    write_text(dir.file("bad.txt"), "100\n-5\n");
    CHECK_THROWS_AS(nilm::load_reference_states(dir.file("bad.txt")), nilm::ParseError);
    write_text(dir.file("empty.txt"), "# nothing\n");
    CHECK_THROWS_AS(nilm::load_reference_states(dir.file("empty.txt")), nilm::ConfigError);
}
