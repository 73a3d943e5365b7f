#include "nilm/kernels.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"

namespace {

using nilm::kernels::Backend;
using nilm::kernels::Ops;

std::vector<double> random_doubles(std::mt19937_64& rng, std::size_t n,
                                   double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = dist(rng);
    }
    return out;
}

std::vector<std::uint64_t> random_states(std::mt19937_64& rng, std::size_t n,
                                         unsigned bits) {
    std::uniform_int_distribution<std::uint64_t> dist(
        0, (std::uint64_t{1} << bits) - 1);
    std::vector<std::uint64_t> out(n);
    for (auto& v : out) {
        v = dist(rng);
    }
    return out;
}

bool bytes_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar reductions match simple accumulation") {
    std::mt19937_64 rng(11);
    const Ops& ops = nilm::kernels::scalar_ops();
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 1000u}) {
        const auto x = random_doubles(rng, n, -5.0, 5.0);
        const auto y = random_doubles(rng, n, -5.0, 5.0);
        double sum = 0.0;
        double dot = 0.0;
        double ssd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += x[i];
            dot += x[i] * y[i];
            const double d = x[i] - y[i];
            ssd += d * d;
        }
        CHECK(ops.sum(x.data(), n) == doctest::Approx(sum).epsilon(1e-12));
        CHECK(ops.dot(x.data(), y.data(), n) ==
              doctest::Approx(dot).epsilon(1e-12));
        CHECK(ops.sum_sq_diff(x.data(), y.data(), n) ==
              doctest::Approx(ssd).epsilon(1e-12));
        if (n > 0) {
            double mx = x[0];
            for (double v : x) {
                mx = v > mx ? v : mx;
            }
            CHECK(ops.max(x.data(), n) == mx);
        }
    }
}

TEST_CASE("exp_negative tracks std::exp over its domain") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> dist(-708.0, 0.0);
    double worst = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double x = dist(rng);
        const double got = nilm::kernels::exp_negative(x);
        const double want = std::exp(x);
        const double rel = std::abs(got - want) / want;
        worst = rel > worst ? rel : worst;
    }
    CHECK(worst < 1e-13);
    CHECK(nilm::kernels::exp_negative(0.0) == 1.0);
    CHECK(nilm::kernels::exp_negative(-708.0) > 0.0);
}

TEST_CASE("exp_shift flushes arguments below the underflow cutoff") {
    const Ops& ops = nilm::kernels::scalar_ops();
    const std::vector<double> lw = {0.0, -1.0, -700.0, -710.0, -5000.0};
    std::vector<double> w(lw.size(), -1.0);
    ops.exp_shift(lw.data(), lw.size(), 0.0, w.data());
    CHECK(w[0] == 1.0);
    CHECK(w[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(w[2] > 0.0);
    CHECK(w[3] == 0.0);
    CHECK(w[4] == 0.0);
}

TEST_CASE("flip_states toggles exactly the particles drawn below threshold") {
    const Ops& ops = nilm::kernels::scalar_ops();
    std::vector<std::uint64_t> states = {0b000, 0b010, 0b011, 0b110, 0b000};
    const std::vector<double> u = {0.05, 0.05, 0.5, 0.2, 0.9};
    // bit 1: off particles toggle when u < 0.1, on particles when u < 0.3.
    ops.flip_states(states.data(), u.data(), states.size(), 1, 0.1, 0.3);
    CHECK(states[0] == 0b010);  // off, u=0.05 < 0.1: turns on
    CHECK(states[1] == 0b000);  // on, u=0.05 < 0.3: turns off
    CHECK(states[2] == 0b011);  // on, u=0.5: stays
    CHECK(states[3] == 0b100);  // on, u=0.2 < 0.3: turns off
    CHECK(states[4] == 0b000);  // off, u=0.9: stays
}

TEST_CASE("lookup_power and masked ops agree with direct indexing") {
    const Ops& ops = nilm::kernels::scalar_ops();
    const std::vector<double> table = {0.0, 100.0, 40.0, 140.0};
    const std::vector<std::uint64_t> states = {0, 1, 2, 3, 1, 0};
    std::vector<double> out(states.size(), 0.0);
    ops.lookup_power(states.data(), states.size(), table.data(), 0b11,
                     out.data());
    const std::vector<double> want = {0.0, 100.0, 40.0, 140.0, 100.0, 0.0};
    CHECK(bytes_equal(out, want));

    std::vector<double> acc(states.size(), 1.0);
    ops.masked_add(states.data(), states.size(), 0b10, 40.0, acc.data());
    const std::vector<double> want_acc = {1.0, 1.0, 41.0, 41.0, 1.0, 1.0};
    CHECK(bytes_equal(acc, want_acc));

    const std::vector<double> weights = {0.1, 0.2, 0.3, 0.15, 0.15, 0.1};
    CHECK(ops.masked_weight_sum(states.data(), weights.data(), states.size(),
                                0b01) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("simd backend matches the scalar reference") {
    if (!nilm::kernels::backend_supported(Backend::avx2)) {
        MESSAGE("avx2 backend unavailable, skipping");
        return;
    }
    const Ops& scalar = nilm::kernels::scalar_ops();
    REQUIRE(nilm::kernels::set_backend(Backend::avx2));
    const Ops& simd = nilm::kernels::active_ops();
    REQUIRE(std::strcmp(simd.name, "avx2") == 0);

    std::mt19937_64 rng(13);
    for (std::size_t n : {1u, 2u, 4u, 5u, 8u, 15u, 1000u, 1001u}) {
        const auto x = random_doubles(rng, n, 0.0, 3000.0);
        const auto y = random_doubles(rng, n, 0.0, 3000.0);

        CHECK(simd.sum(x.data(), n) ==
              doctest::Approx(scalar.sum(x.data(), n)).epsilon(1e-12));
        CHECK(simd.dot(x.data(), y.data(), n) ==
              doctest::Approx(scalar.dot(x.data(), y.data(), n))
                  .epsilon(1e-12));
        CHECK(simd.sum_sq_diff(x.data(), y.data(), n) ==
              doctest::Approx(scalar.sum_sq_diff(x.data(), y.data(), n))
                  .epsilon(1e-12));
        CHECK(simd.max(x.data(), n) == scalar.max(x.data(), n));

        std::vector<double> a(n), b(n);
        scalar.squared_error_scale(x.data(), n, 1234.5, -8e-4, a.data());
        simd.squared_error_scale(x.data(), n, 1234.5, -8e-4, b.data());
        CHECK(bytes_equal(a, b));

        const auto lw = random_doubles(rng, n, -750.0, 0.0);
        scalar.exp_shift(lw.data(), n, 0.0, a.data());
        simd.exp_shift(lw.data(), n, 0.0, b.data());
        CHECK(bytes_equal(a, b));

        a = x;
        b = x;
        scalar.mul_inplace(a.data(), y.data(), n);
        simd.mul_inplace(b.data(), y.data(), n);
        CHECK(bytes_equal(a, b));

        a = x;
        b = x;
        scalar.scale(a.data(), n, 0.37);
        simd.scale(b.data(), n, 0.37);
        CHECK(bytes_equal(a, b));

        auto s1 = random_states(rng, n, 9);
        auto s2 = s1;
        const auto u = random_doubles(rng, n, 0.0, 1.0);
        scalar.flip_states(s1.data(), u.data(), n, 3, 0.01, 0.05);
        simd.flip_states(s2.data(), u.data(), n, 3, 0.01, 0.05);
        CHECK(s1 == s2);

        const auto table = random_doubles(rng, 16, 0.0, 3000.0);
        scalar.lookup_power(s1.data(), n, table.data(), 0b1111, a.data());
        simd.lookup_power(s2.data(), n, table.data(), 0b1111, b.data());
        CHECK(bytes_equal(a, b));

        scalar.masked_add(s1.data(), n, 1u << 4, 250.0, a.data());
        simd.masked_add(s2.data(), n, 1u << 4, 250.0, b.data());
        CHECK(bytes_equal(a, b));

        CHECK(simd.masked_weight_sum(s1.data(), u.data(), n, 1u << 2) ==
              doctest::Approx(
                  scalar.masked_weight_sum(s1.data(), u.data(), n, 1u << 2))
                  .epsilon(1e-12));
    }
    REQUIRE(nilm::kernels::set_backend(Backend::scalar));
}

TEST_CASE("backend switching is explicit and reversible") {
    REQUIRE(nilm::kernels::set_backend(Backend::scalar));
    CHECK(nilm::kernels::active_backend() == Backend::scalar);
    CHECK(std::strcmp(nilm::kernels::active_ops().name, "scalar") == 0);
    CHECK(nilm::kernels::backend_supported(Backend::scalar));
    if (nilm::kernels::backend_supported(Backend::avx2)) {
        REQUIRE(nilm::kernels::set_backend(Backend::avx2));
        CHECK(nilm::kernels::active_backend() == Backend::avx2);
        REQUIRE(nilm::kernels::set_backend(Backend::scalar));
    } else {
        CHECK_FALSE(nilm::kernels::set_backend(Backend::avx2));
        CHECK(nilm::kernels::active_backend() == Backend::scalar);
    }
}
