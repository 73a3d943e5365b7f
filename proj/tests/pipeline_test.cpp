#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "nilm/errors.hpp"
#include "nilm/pipeline.hpp"
#include "nilm/trace_io.hpp"

namespace {

std::vector<nilm::ApplianceSpec> two_appliance_specs() {
    return {
        {"fridge", 200.0, 1200.0, 20.0, 3.0},
        {"heater", 1500.0, 900.0, 12.0, 4.0},
    };
}

}  // namespace

TEST_CASE("a flat trace produces no models and zero estimates") {
    std::vector<nilm::PowerSample> trace;
    for (std::int64_t t = 0; t < 2 * 86400; ++t) {
        trace.push_back({t, 0.0});
    }
    std::vector<nilm::DisaggregationEstimate> estimates;
    const auto result = nilm::run_online(trace, {}, nilm::ApplianceDatabase{}, estimates);
    CHECK(result.database.models().empty());
    CHECK(result.reports.size() == 2);
    REQUIRE(estimates.size() == trace.size());
    for (const auto& estimate : estimates) {
        CHECK(estimate.per_appliance.empty());
        CHECK(estimate.total_estimated_power == 0.0);
    }
}

TEST_CASE("two appliances are learned and classified online") {
    const auto trace = nilm::generate_synthetic(two_appliance_specs(), 3, 7);
    std::vector<nilm::DisaggregationEstimate> estimates;
    const auto result =
        nilm::run_online(trace.samples, {}, nilm::ApplianceDatabase{}, estimates);

    REQUIRE(result.database.models().size() == 2);
    std::vector<double> powers = {result.database.models()[0].on_power,
                                  result.database.models()[1].on_power};
    std::sort(powers.begin(), powers.end());
    CHECK(std::abs(powers[0] - 200.0) <= 25.0);
    CHECK(std::abs(powers[1] - 1500.0) <= 25.0);
    CHECK(result.reports.size() == 3);
    CHECK(result.detected_states_per_day.size() == 3);

    REQUIRE(estimates.size() == trace.samples.size());
    for (const auto& estimate : estimates) {
        if (estimate.timestamp < 86400) {
            CHECK(estimate.per_appliance.empty());
        } else {
            CHECK(estimate.per_appliance.size() == 2);
        }
    }

    const auto& model = result.database.models()[0];
    CHECK(model.metadata.energy_kwh_per_day.count(1) == 1);
    CHECK(model.metadata.energy_kwh_per_day.at(1) > 0.0);
    CHECK(model.metadata.operational_seconds_per_day.at(1) > 0);
}

TEST_CASE("runs are deterministic end to end") {
    const auto trace = nilm::generate_synthetic(two_appliance_specs(), 2, 11);
    std::vector<nilm::DisaggregationEstimate> a;
    std::vector<nilm::DisaggregationEstimate> b;
    const auto ra = nilm::run_online(trace.samples, {}, nilm::ApplianceDatabase{}, a);
    const auto rb = nilm::run_online(trace.samples, {}, nilm::ApplianceDatabase{}, b);
    CHECK(ra.database == rb.database);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].per_appliance.size() == b[i].per_appliance.size());
        CHECK(a[i].total_estimated_power == b[i].total_estimated_power);
        for (std::size_t j = 0; j < a[i].per_appliance.size(); ++j) {
            CHECK(a[i].per_appliance[j].on_probability ==
                  b[i].per_appliance[j].on_probability);
        }
    }
}

TEST_CASE("timestamp jumps split the learning window") {
    std::vector<nilm::PowerSample> trace;
    const auto add_segment = [&](std::int64_t start, std::int64_t length) {
        for (std::int64_t t = start; t < start + length; ++t) {
            const std::int64_t offset = t - start;
            const bool on = (offset >= 1000 && offset < 2000) ||
                            (offset >= 3000 && offset < 4000);
            trace.push_back({t, on ? 500.0 : 0.0});
        }
    };
    add_segment(0, 7200);
    add_segment(10800, 7200);

    std::vector<nilm::DisaggregationEstimate> estimates;
    const auto result = nilm::run_online(trace, {}, nilm::ApplianceDatabase{}, estimates);
    CHECK(result.reports.size() == 2);
    REQUIRE(result.database.models().size() == 1);
    CHECK(std::abs(result.database.models()[0].on_power - 500.0) <= 10.0);
    CHECK(result.database.models()[0].metadata.total_appearances() == 4);
}

TEST_CASE("a trailing window shorter than an hour is not learned from") {
    std::vector<nilm::PowerSample> trace;
    for (std::int64_t t = 0; t < 86400 + 1800; ++t) {
        double level = 0.0;
        if ((t % 7200) < 1800) {
            level = 400.0;
        }
        trace.push_back({t, level});
    }
    std::vector<nilm::DisaggregationEstimate> estimates;
    const auto result = nilm::run_online(trace, {}, nilm::ApplianceDatabase{}, estimates);
    CHECK(result.reports.size() == 1);
    CHECK(estimates.size() == trace.size());
}

TEST_CASE("pushed samples must advance in time") {
    nilm::OnlinePipeline pipeline({}, nilm::ApplianceDatabase{});
    pipeline.push({100, 0.0});
    CHECK_THROWS_AS(pipeline.push({100, 0.0}), nilm::OrderingError);
    CHECK_THROWS_AS(pipeline.push({99, 0.0}), nilm::OrderingError);
    CHECK_NOTHROW(pipeline.push({101, 0.0}));
}

TEST_CASE("window length must cover at least an hour") {
    nilm::PipelineConfig config;
    config.edges.window_length = 1800;
    CHECK_THROWS_AS(nilm::OnlinePipeline(config, nilm::ApplianceDatabase{}),
                    nilm::ConfigError);
}
