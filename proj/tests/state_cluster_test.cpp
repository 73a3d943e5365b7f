#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nilm/state_cluster.hpp"

namespace {

std::vector<nilm::EdgePair> pairs_with_magnitudes(const std::vector<double>& magnitudes) {
    std::vector<nilm::EdgePair> pairs;
    std::int64_t t = 0;
    for (double m : magnitudes) {
        pairs.push_back({t, t + 10, m, 10});
        t += 20;
    }
    return pairs;
}

}  // namespace

TEST_CASE("bin index quantizes to 5 W bins over [0, 3000)") {
    CHECK(nilm::bin_index(0.0) == 0);
    CHECK(nilm::bin_index(4.999) == 0);
    CHECK(nilm::bin_index(5.0) == 1);
    CHECK(nilm::bin_index(198.0) == 39);
    CHECK(nilm::bin_index(202.0) == 40);
    CHECK(nilm::bin_index(795.0) == 159);
    CHECK(nilm::bin_index(2999.99) == 599);
    CHECK(nilm::bin_index(3000.0) == -1);
    CHECK(nilm::bin_index(3200.0) == -1);
    CHECK(nilm::bin_index(-0.01) == -1);
}

TEST_CASE("histogram counts magnitudes and tracks overflow") {
    const auto hist =
        nilm::build_histogram(pairs_with_magnitudes({198, 198, 202, 795, 3200, 3001}));
    CHECK(hist.counts[39] == 2);
    CHECK(hist.counts[40] == 1);
    CHECK(hist.counts[159] == 1);
    CHECK(hist.overflow_count == 2);
    CHECK(hist.total() == 6);
}

TEST_CASE("adjacent bins cluster to the count-weighted mean of bin centers") {
    const auto hist = nilm::build_histogram(
        pairs_with_magnitudes({198, 198, 198, 198, 202, 202, 202, 202, 202, 202}));
    const auto states = nilm::segment(hist, {});
    REQUIRE(states.size() == 1);
    CHECK(states[0].nominal_power == doctest::Approx(200.5).epsilon(1e-12));
    CHECK(states[0].support == 10);
    CHECK(states[0].bin_lo == 39);
    CHECK(states[0].bin_hi == 40);
}

TEST_CASE("clusters split on empty-bin runs of gap_bins or more") {
    nilm::StateHistogram hist;
    hist.counts[10] = 3;
    hist.counts[12] = 3;  // one empty bin between: same cluster
    hist.counts[20] = 3;
    hist.counts[23] = 3;  // two empty bins between: separate clusters
    const auto states = nilm::segment(hist, {2, 2});
    REQUIRE(states.size() == 3);
    CHECK(states[0].bin_lo == 10);
    CHECK(states[0].bin_hi == 12);
    CHECK(states[1].bin_lo == 20);
    CHECK(states[1].bin_hi == 20);
    CHECK(states[2].bin_lo == 23);
    CHECK(states[2].bin_hi == 23);
}

TEST_CASE("clusters below min_support are dropped") {
    nilm::StateHistogram hist;
    hist.counts[40] = 1;
    hist.counts[100] = 2;
    const auto states = nilm::segment(hist, {2, 2});
    REQUIRE(states.size() == 1);
    CHECK(states[0].bin_lo == 100);

    const auto all = nilm::segment(hist, {1, 2});
    CHECK(all.size() == 2);
}

TEST_CASE("support is conserved when nothing is dropped") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> magnitude(30.0, 2990.0);
    std::vector<double> magnitudes(500);
    for (auto& m : magnitudes) {
        m = magnitude(rng);
    }
    const auto hist = nilm::build_histogram(pairs_with_magnitudes(magnitudes));
    const auto states = nilm::segment(hist, {1, 2});
    std::uint64_t total = 0;
    for (const auto& state : states) {
        total += state.support;
    }
    CHECK(total == hist.total());
    for (std::size_t i = 1; i < states.size(); ++i) {
        CHECK(states[i - 1].nominal_power < states[i].nominal_power);
    }
}

TEST_CASE("planted power levels are recovered within 10 W") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> low(200.0, 5.0);
    std::normal_distribution<double> high(800.0, 5.0);
    std::vector<double> magnitudes;
    for (int i = 0; i < 50; ++i) {
        magnitudes.push_back(low(rng));
        magnitudes.push_back(high(rng));
    }
    const auto states =
        nilm::segment(nilm::build_histogram(pairs_with_magnitudes(magnitudes)), {});
    REQUIRE(states.size() == 2);
    CHECK(std::abs(states[0].nominal_power - 200.0) <= 10.0);
    CHECK(std::abs(states[1].nominal_power - 800.0) <= 10.0);
    CHECK(states[0].support + states[1].support == 100);
}

TEST_CASE("segmentation is a pure function of the histogram") {
    nilm::StateHistogram hist;
    hist.counts[39] = 4;
    hist.counts[40] = 6;
    hist.counts[200] = 9;
    const auto a = nilm::segment(hist, {});
    const auto b = nilm::segment(hist, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].nominal_power == b[i].nominal_power);
        CHECK(a[i].support == b[i].support);
    }
}
