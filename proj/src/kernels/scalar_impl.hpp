#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

// Scalar kernel bodies, shared between the scalar backend and the SIMD
// backends' remainder loops. Everything here must stay free of FMA-contractable
// expressions that differ from the SIMD lanes: each statement is one multiply,
// one subtract, or one add, mirroring the intrinsic sequences.

namespace nilm::kernels::detail {

// exp(x) for x in [-708, 0], Cephes-style: x = n*ln2 + r, e^r as a rational
// polynomial in r^2, then scale by 2^n through the exponent bits. Results for
// x >= -708 stay normal, so the bit-level 2^n scaling is exact.
inline constexpr double kExpLog2e = 1.4426950408889634073599;
inline constexpr double kExpC1 = 6.93145751953125e-1;
inline constexpr double kExpC2 = 1.42860682030941723212e-6;
inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;
inline constexpr double kExpUnderflow = -708.0;

inline double exp_negative_impl(double x) {
    if (x < kExpUnderflow) {
        return 0.0;
    }
    const double nf = std::floor(kExpLog2e * x + 0.5);
    double r = x - nf * kExpC1;
    r = r - nf * kExpC2;
    const double rr = r * r;
    double p = kExpP0 * rr + kExpP1;
    p = p * rr + kExpP2;
    p = p * r;
    double q = kExpQ0 * rr + kExpQ1;
    q = q * rr + kExpQ2;
    q = q * rr + kExpQ3;
    double e = p / (q - p);
    e = 1.0 + 2.0 * e;
    const auto k = static_cast<std::int64_t>(nf);
    const std::uint64_t bits =
        std::bit_cast<std::uint64_t>(e) + (static_cast<std::uint64_t>(k) << 52);
    return std::bit_cast<double>(bits);
}

inline double sum_impl(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

inline double dot_impl(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

inline double sum_sq_diff_impl(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline double max_impl(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        m = x[i] > m ? x[i] : m;
    }
    return m;
}

inline void squared_error_scale_impl(const double* x, std::size_t n, double obs,
                                     double neg_inv_two_var, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - obs;
        const double dd = d * d;
        out[i] = dd * neg_inv_two_var;
    }
}

inline void exp_shift_impl(const double* lw, std::size_t n, double shift,
                           double* w) {
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = exp_negative_impl(lw[i] - shift);
    }
}

inline void mul_inplace_impl(double* x, const double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] *= y[i];
    }
}

inline void scale_impl(double* x, std::size_t n, double factor) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] *= factor;
    }
}

inline void flip_states_impl(std::uint64_t* states, const double* u,
                             std::size_t n, unsigned bit, double p_on_given_off,
                             double p_off_given_on) {
    const std::uint64_t mask = std::uint64_t{1} << bit;
    for (std::size_t i = 0; i < n; ++i) {
        const bool on = (states[i] & mask) != 0;
        const double threshold = on ? p_off_given_on : p_on_given_off;
        if (u[i] < threshold) {
            states[i] ^= mask;
        }
    }
}

inline void lookup_power_impl(const std::uint64_t* states, std::size_t n,
                              const double* table, std::uint64_t mask,
                              double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = table[states[i] & mask];
    }
}

inline void masked_add_impl(const std::uint64_t* states, std::size_t n,
                            std::uint64_t bit_mask, double value, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        if ((states[i] & bit_mask) != 0) {
            out[i] += value;
        }
    }
}

inline double masked_weight_sum_impl(const std::uint64_t* states,
                                     const double* w, std::size_t n,
                                     std::uint64_t bit_mask) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if ((states[i] & bit_mask) != 0) {
            acc += w[i];
        }
    }
    return acc;
}

}  // namespace nilm::kernels::detail
