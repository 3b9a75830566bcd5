#include "memrate/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace memrate::kern {

const KernelSet& active_kernels() {
    static const KernelSet* selected = [] {
        const char* ovr = std::getenv("MEMRATE_KERNEL");
        if (ovr && std::strcmp(ovr, "scalar") == 0) return &scalar_kernels();
        if (ovr && std::strcmp(ovr, "avx2") == 0 && avx2_kernels() && avx2_available())
            return avx2_kernels();
        if (avx2_kernels() && avx2_available()) return avx2_kernels();
        return &scalar_kernels();
    }();
    return *selected;
}

}  // namespace memrate::kern
