#include "backends.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

#include "scalar_impl.hpp"

// AVX2 variants of the kernels in scalar_impl.hpp. Elementwise ops use the
// same multiply/add/subtract sequence as the scalar reference (no FMA, and
// this unit is compiled with -ffp-contract=off), so they are bit-exact
// against it; reductions accumulate in four lanes and only match to rounding.

namespace nilm::kernels {
namespace {

double reduce_add(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s2 = _mm_add_pd(lo, hi);
    const __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
    return _mm_cvtsd_f64(s1);
}

double reduce_max(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m2 = _mm_max_pd(lo, hi);
    const __m128d m1 = _mm_max_sd(m2, _mm_unpackhi_pd(m2, m2));
    return _mm_cvtsd_f64(m1);
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double total = reduce_add(acc);
    for (; i < n; ++i) {
        total += x[i];
    }
    return total;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, prod);
    }
    double total = reduce_add(acc);
    for (; i < n; ++i) {
        total += a[i] * b[i];
    }
    return total;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = reduce_add(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

double max_avx2(const double* x, std::size_t n) {
    if (n < 4) {
        return detail::max_impl(x, n);
    }
    __m256d m = _mm256_loadu_pd(x);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) {
        m = _mm256_max_pd(m, _mm256_loadu_pd(x + i));
    }
    double result = reduce_max(m);
    for (; i < n; ++i) {
        result = x[i] > result ? x[i] : result;
    }
    return result;
}

void squared_error_scale_avx2(const double* x, std::size_t n, double obs,
                              double neg_inv_two_var, double* out) {
    const __m256d obs4 = _mm256_set1_pd(obs);
    const __m256d scale4 = _mm256_set1_pd(neg_inv_two_var);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), obs4);
        const __m256d dd = _mm256_mul_pd(d, d);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(dd, scale4));
    }
    detail::squared_error_scale_impl(x + i, n - i, obs, neg_inv_two_var, out + i);
}

void exp_shift_avx2(const double* lw, std::size_t n, double shift, double* w) {
    const __m256d shift4 = _mm256_set1_pd(shift);
    const __m256d log2e = _mm256_set1_pd(detail::kExpLog2e);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d c1 = _mm256_set1_pd(detail::kExpC1);
    const __m256d c2 = _mm256_set1_pd(detail::kExpC2);
    const __m256d p0 = _mm256_set1_pd(detail::kExpP0);
    const __m256d p1 = _mm256_set1_pd(detail::kExpP1);
    const __m256d p2 = _mm256_set1_pd(detail::kExpP2);
    const __m256d q0 = _mm256_set1_pd(detail::kExpQ0);
    const __m256d q1 = _mm256_set1_pd(detail::kExpQ1);
    const __m256d q2 = _mm256_set1_pd(detail::kExpQ2);
    const __m256d q3 = _mm256_set1_pd(detail::kExpQ3);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d lower = _mm256_set1_pd(detail::kExpUnderflow);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_sub_pd(_mm256_loadu_pd(lw + i), shift4);
        const __m256d keep = _mm256_cmp_pd(x, lower, _CMP_GE_OQ);

        const __m256d nf =
            _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(log2e, x), half));
        __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(nf, c1));
        r = _mm256_sub_pd(r, _mm256_mul_pd(nf, c2));
        const __m256d rr = _mm256_mul_pd(r, r);

        __m256d p = _mm256_add_pd(_mm256_mul_pd(p0, rr), p1);
        p = _mm256_add_pd(_mm256_mul_pd(p, rr), p2);
        p = _mm256_mul_pd(p, r);

        __m256d q = _mm256_add_pd(_mm256_mul_pd(q0, rr), q1);
        q = _mm256_add_pd(_mm256_mul_pd(q, rr), q2);
        q = _mm256_add_pd(_mm256_mul_pd(q, rr), q3);

        __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
        e = _mm256_add_pd(one, _mm256_mul_pd(two, e));

        // 2^n scaling via the exponent bits; nf is integral and in range for
        // kept lanes, discarded lanes are masked below.
        const __m128i n32 = _mm256_cvtpd_epi32(nf);
        const __m256i n64 = _mm256_cvtepi32_epi64(n32);
        const __m256i bits =
            _mm256_add_epi64(_mm256_castpd_si256(e), _mm256_slli_epi64(n64, 52));
        const __m256d scaled = _mm256_castsi256_pd(bits);

        _mm256_storeu_pd(w + i, _mm256_and_pd(scaled, keep));
    }
    detail::exp_shift_impl(lw + i, n - i, shift, w + i);
}

void mul_inplace_avx2(double* x, const double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    detail::mul_inplace_impl(x + i, y + i, n - i);
}

void scale_avx2(double* x, std::size_t n, double factor) {
    const __m256d f4 = _mm256_set1_pd(factor);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), f4));
    }
    detail::scale_impl(x + i, n - i, factor);
}

void flip_states_avx2(std::uint64_t* states, const double* u, std::size_t n,
                      unsigned bit, double p_on_given_off,
                      double p_off_given_on) {
    const std::uint64_t mask = std::uint64_t{1} << bit;
    const __m256i mask4 = _mm256_set1_epi64x(static_cast<long long>(mask));
    const __m256d rise = _mm256_set1_pd(p_on_given_off);
    const __m256d fall = _mm256_set1_pd(p_off_given_on);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(states + i));
        const __m256i onbits = _mm256_cmpeq_epi64(_mm256_and_si256(s, mask4), mask4);
        const __m256d threshold =
            _mm256_blendv_pd(rise, fall, _mm256_castsi256_pd(onbits));
        const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(u + i), threshold, _CMP_LT_OQ);
        const __m256i toggle = _mm256_and_si256(_mm256_castpd_si256(lt), mask4);
        s = _mm256_xor_si256(s, toggle);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(states + i), s);
    }
    detail::flip_states_impl(states + i, u + i, n - i, bit, p_on_given_off,
                             p_off_given_on);
}

void lookup_power_avx2(const std::uint64_t* states, std::size_t n,
                       const double* table, std::uint64_t mask, double* out) {
    const __m256i mask4 = _mm256_set1_epi64x(static_cast<long long>(mask));
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(states + i));
        const __m256i idx = _mm256_and_si256(s, mask4);
        _mm256_storeu_pd(out + i, _mm256_i64gather_pd(table, idx, 8));
    }
    detail::lookup_power_impl(states + i, n - i, table, mask, out + i);
}

void masked_add_avx2(const std::uint64_t* states, std::size_t n,
                     std::uint64_t bit_mask, double value, double* out) {
    const __m256i mask4 = _mm256_set1_epi64x(static_cast<long long>(bit_mask));
    const __m256i zero = _mm256_setzero_si256();
    const __m256d value4 = _mm256_set1_pd(value);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(states + i));
        const __m256i isz = _mm256_cmpeq_epi64(_mm256_and_si256(s, mask4), zero);
        const __m256d sel =
            _mm256_andnot_pd(_mm256_castsi256_pd(isz), value4);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), sel));
    }
    detail::masked_add_impl(states + i, n - i, bit_mask, value, out + i);
}

double masked_weight_sum_avx2(const std::uint64_t* states, const double* w,
                              std::size_t n, std::uint64_t bit_mask) {
    const __m256i mask4 = _mm256_set1_epi64x(static_cast<long long>(bit_mask));
    const __m256i zero = _mm256_setzero_si256();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(states + i));
        const __m256i isz = _mm256_cmpeq_epi64(_mm256_and_si256(s, mask4), zero);
        const __m256d sel =
            _mm256_andnot_pd(_mm256_castsi256_pd(isz), _mm256_loadu_pd(w + i));
        acc = _mm256_add_pd(acc, sel);
    }
    double total = reduce_add(acc);
    for (; i < n; ++i) {
        if ((states[i] & bit_mask) != 0) {
            total += w[i];
        }
    }
    return total;
}

const Ops kAvx2Ops = {
    "avx2",
    sum_avx2,
    dot_avx2,
    sum_sq_diff_avx2,
    max_avx2,
    squared_error_scale_avx2,
    exp_shift_avx2,
    mul_inplace_avx2,
    scale_avx2,
    flip_states_avx2,
    lookup_power_avx2,
    masked_add_avx2,
    masked_weight_sum_avx2,
};

}  // namespace

const Ops* avx2_ops_or_null() {
    return &kAvx2Ops;
}

}  // namespace nilm::kernels

#else

namespace nilm::kernels {

const Ops* avx2_ops_or_null() {
    return nullptr;
}

}  // namespace nilm::kernels

#endif
