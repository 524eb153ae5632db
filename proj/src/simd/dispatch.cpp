#include "evcalib/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace evcalib::simd {

#if defined(EVCALIB_WITH_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(EVCALIB_WITH_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
    return supported ? &avx2_kernel_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable* chosen = [] {
        const char* env = std::getenv("EVCALIB_SIMD");
        if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
        const KernelTable* fast = avx2_kernels();
        return fast != nullptr ? fast : &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace evcalib::simd
