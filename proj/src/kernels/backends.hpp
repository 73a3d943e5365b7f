#pragma once

#include "nilm/kernels.hpp"

namespace nilm::kernels {

// Null when the backend is not compiled in (non-x86 builds).
const Ops* avx2_ops_or_null();

}  // namespace nilm::kernels
