#include "nilm/kernels.hpp"

#include "scalar_impl.hpp"

namespace nilm::kernels {

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",
        detail::sum_impl,
        detail::dot_impl,
        detail::sum_sq_diff_impl,
        detail::max_impl,
        detail::squared_error_scale_impl,
        detail::exp_shift_impl,
        detail::mul_inplace_impl,
        detail::scale_impl,
        detail::flip_states_impl,
        detail::lookup_power_impl,
        detail::masked_add_impl,
        detail::masked_weight_sum_impl,
    };
    return ops;
}

double exp_negative(double x) {
    return detail::exp_negative_impl(x);
}

}  // namespace nilm::kernels
