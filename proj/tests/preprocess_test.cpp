#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nilm/errors.hpp"
#include "nilm/preprocess.hpp"

namespace {

std::vector<double> brute_force_median(const std::vector<double>& samples, int window) {
    const std::size_t n = samples.size();
    std::vector<double> out(n);
    const std::size_t max_half = static_cast<std::size_t>(window) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t half = std::min({max_half, i, n - 1 - i});
        std::vector<double> buf(samples.begin() + static_cast<std::ptrdiff_t>(i - half),
                                samples.begin() + static_cast<std::ptrdiff_t>(i + half + 1));
        std::sort(buf.begin(), buf.end());
        out[i] = buf[buf.size() / 2];
    }
    return out;
}

}  // namespace

TEST_CASE("default filter configuration") {
    const nilm::FilterConfig config;
    CHECK(config.median_window == 31);
    CHECK(config.smoothing == nilm::Smoothing::none);
    CHECK(config.smoothing_window == 5);
}

TEST_CASE("median filter removes isolated spikes completely") {
    std::vector<double> samples(200, 100.0);
    samples[50] = 3000.0;
    samples[120] = 0.0;
    const auto filtered = nilm::median_filter(samples, 31);
    for (double v : filtered) {
        CHECK(v == 100.0);
    }
}

TEST_CASE("median filter removes spike bursts shorter than half the window") {
    std::vector<double> samples(200, 100.0);
    for (int i = 60; i < 75; ++i) {
        samples[static_cast<std::size_t>(i)] = 2500.0;
    }
    const auto filtered = nilm::median_filter(samples, 31);
    for (double v : filtered) {
        CHECK(v == 100.0);
    }
}

TEST_CASE("median filter preserves genuine level changes") {
    std::vector<double> samples(100, 0.0);
    for (std::size_t i = 50; i < 100; ++i) {
        samples[i] = 500.0;
    }
    const auto filtered = nilm::median_filter(samples, 31);
    for (std::size_t i = 0; i < 35; ++i) {
        CHECK(filtered[i] == 0.0);
    }
    for (std::size_t i = 65; i < 100; ++i) {
        CHECK(filtered[i] == 500.0);
    }
    for (double v : filtered) {
        CHECK((v == 0.0 || v == 500.0));
    }
}

TEST_CASE("median filter is idempotent on piecewise-constant signals") {
    std::vector<double> samples;
    for (int level : {0, 0, 200, 200, 200, 1500, 1500, 0}) {
        samples.insert(samples.end(), 40, static_cast<double>(level));
    }
    const auto once = nilm::median_filter(samples, 31);
    const auto twice = nilm::median_filter(once, 31);
    CHECK(once == twice);
}

TEST_CASE("median filter matches a brute-force oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> power(0.0, 2000.0);
    std::vector<double> samples(257);
    for (auto& v : samples) {
        v = power(rng);
    }
    for (int window : {3, 5, 31}) {
        CHECK(nilm::median_filter(samples, window) == brute_force_median(samples, window));
    }
}

TEST_CASE("median filter output stays within the input range") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> power(0.0, 3000.0);
    std::vector<double> samples(500);
    for (auto& v : samples) {
        v = power(rng);
    }
    const auto filtered = nilm::median_filter(samples, 31);
    REQUIRE(filtered.size() == samples.size());
    const double lo = *std::min_element(samples.begin(), samples.end());
    const double hi = *std::max_element(samples.begin(), samples.end());
    for (double v : filtered) {
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
}

TEST_CASE("median filter rejects bad windows") {
    const std::vector<double> samples(50, 1.0);
    CHECK_THROWS_AS(nilm::median_filter(samples, 4), nilm::ConfigError);
    CHECK_THROWS_AS(nilm::median_filter(samples, 1), nilm::ConfigError);
    CHECK_THROWS_AS(nilm::median_filter(samples, 51), nilm::ConfigError);
    CHECK_NOTHROW(nilm::median_filter(samples, 49));
}

TEST_CASE("moving-average smoothing shrinks noise on a constant signal") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 10.0);
    std::vector<double> samples(2000);
    for (auto& v : samples) {
        v = 500.0 + noise(rng);
    }
    nilm::FilterConfig median_only;
    nilm::FilterConfig with_ma;
    with_ma.smoothing = nilm::Smoothing::moving_average;
    with_ma.smoothing_window = 9;
    const auto a = nilm::smooth(samples, median_only);
    const auto b = nilm::smooth(samples, with_ma);
    const auto deviation = [](const std::vector<double>& vs) {
        double sum = 0.0;
        for (double v : vs) {
            sum += (v - 500.0) * (v - 500.0);
        }
        return std::sqrt(sum / static_cast<double>(vs.size()));
    };
    CHECK(deviation(a) < 10.0);
    CHECK(deviation(b) < deviation(a));
}

TEST_CASE("smoothing defaults to the median filter alone") {
    std::vector<double> samples(100, 10.0);
    samples[40] = 900.0;
    const nilm::FilterConfig config;
    const auto smoothed = nilm::smooth(samples, config);
    CHECK(smoothed == nilm::median_filter(samples, config.median_window));
}
