#include <cstdlib>
#include <string>

#include "wdstop/errors.hpp"
#include "wdstop/simd/kernels.hpp"

namespace wdstop::simd {

#ifndef WDSTOP_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool backend_available(Backend b) {
    return b == Backend::Scalar || avx2_kernels() != nullptr;
}

const KernelTable& kernels(Backend b) {
    if (b == Backend::Scalar) return scalar_kernels();
    const KernelTable* t = avx2_kernels();
    if (t == nullptr) throw InvalidArgument("AVX2 kernels unavailable on this CPU or build");
    return *t;
}

const KernelTable& kernels() {
    static const KernelTable& active = [] () -> const KernelTable& {
        const char* forced = std::getenv("WDSTOP_SIMD");
        if (forced != nullptr && std::string(forced) == "scalar") return scalar_kernels();
        const KernelTable* t = avx2_kernels();
        return t != nullptr ? *t : scalar_kernels();
    }();
    return active;
}

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace wdstop::simd
