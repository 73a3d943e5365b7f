#include "nilm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "backends.hpp"

namespace nilm::kernels {
namespace {

const Ops* ops_for(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return &scalar_ops();
        case Backend::avx2:
            return avx2_ops_or_null();
    }
    return nullptr;
}

bool cpu_supports(Backend backend) {
    if (backend == Backend::scalar) {
        return true;
    }
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend detect_backend() {
    const char* env = std::getenv("NILM_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) {
        return Backend::scalar;
    }
    if (env != nullptr && std::strcmp(env, "avx2") == 0) {
        if (ops_for(Backend::avx2) != nullptr && cpu_supports(Backend::avx2)) {
            return Backend::avx2;
        }
        return Backend::scalar;
    }
    // "auto", unset, or unrecognized: best supported backend.
    if (ops_for(Backend::avx2) != nullptr && cpu_supports(Backend::avx2)) {
        return Backend::avx2;
    }
    return Backend::scalar;
}

std::atomic<const Ops*>& active_slot() {
    static std::atomic<const Ops*> slot{ops_for(detect_backend())};
    return slot;
}

}  // namespace

const Ops& active_ops() {
    return *active_slot().load(std::memory_order_relaxed);
}

Backend active_backend() {
    return &active_ops() == &scalar_ops() ? Backend::scalar : Backend::avx2;
}

bool backend_supported(Backend backend) {
    return ops_for(backend) != nullptr && cpu_supports(backend);
}

bool set_backend(Backend backend) {
    if (!backend_supported(backend)) {
        return false;
    }
    active_slot().store(ops_for(backend), std::memory_order_relaxed);
    return true;
}

}  // namespace nilm::kernels
