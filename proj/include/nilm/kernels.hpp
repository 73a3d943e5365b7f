#pragma once

#include <cstddef>
#include <cstdint>

namespace nilm::kernels {

/// Arithmetic inner-loop kernels behind the particle filter and the batch
/// evaluators. `scalar_ops()` is the reference implementation; SIMD variants
/// must reproduce it bit-for-bit for the elementwise ops (they avoid FMA and
/// keep the per-element operation order) and to tight relative tolerance for
/// the reductions, whose accumulation order differs by lane count.
struct Ops {
    const char* name;

    // Reductions. Accumulation order is backend-specific.
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    double (*max)(const double* x, std::size_t n);

    // Elementwise, bit-exact across backends.
    // out[i] = (x[i] - obs)^2 * neg_inv_two_var
    void (*squared_error_scale)(const double* x, std::size_t n, double obs,
                                double neg_inv_two_var, double* out);
    // w[i] = exp(lw[i] - shift), valid for lw[i] - shift in [-708, 0].
    // Same polynomial on every backend; arguments below -708 flush to 0.
    void (*exp_shift)(const double* lw, std::size_t n, double shift, double* w);
    // x[i] *= y[i]
    void (*mul_inplace)(double* x, const double* y, std::size_t n);
    // x[i] *= factor
    void (*scale)(double* x, std::size_t n, double factor);

    // Particle-set ops on packed joint states (one bit per appliance).
    // Toggle `bit` of states[i] when u[i] < (bit set ? p_off_given_on
    // : p_on_given_off). Bit-exact across backends.
    void (*flip_states)(std::uint64_t* states, const double* u, std::size_t n,
                        unsigned bit, double p_on_given_off,
                        double p_off_given_on);
    // out[i] = table[states[i] & mask]. Bit-exact across backends.
    void (*lookup_power)(const std::uint64_t* states, std::size_t n,
                         const double* table, std::uint64_t mask, double* out);
    // out[i] += value where states[i] & bit_mask. Bit-exact across backends.
    void (*masked_add)(const std::uint64_t* states, std::size_t n,
                       std::uint64_t bit_mask, double value, double* out);
    // Sum of w[i] over particles with (states[i] & bit_mask) != 0. Reduction.
    double (*masked_weight_sum)(const std::uint64_t* states, const double* w,
                                std::size_t n, std::uint64_t bit_mask);
};

enum class Backend { scalar, avx2 };

const Ops& scalar_ops();

/// Best backend compiled in and supported by this CPU. The NILM_KERNELS
/// environment variable ("scalar", "avx2", "auto") overrides auto-detection.
const Ops& active_ops();
Backend active_backend();

bool backend_supported(Backend backend);

/// Force a backend at runtime (tests). Returns false when the backend is not
/// compiled in or not supported by the CPU; active_ops() is unchanged then.
bool set_backend(Backend backend);

/// Reference double-precision exp for arguments in [-708, 0]; the polynomial
/// shared by both backends. Exposed for accuracy tests against std::exp.
double exp_negative(double x);

}  // namespace nilm::kernels
