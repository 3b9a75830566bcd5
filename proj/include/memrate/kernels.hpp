#pragma once

#include <cstdint>

namespace memrate::kern {

// Hot loops of the forward-backward recursions. Branches are pre-sorted so
// that all branches feeding one destination state are contiguous: `seg` holds
// the segment offsets per state (length n_states+1), `gather` the source-state
// index of each branch, and `w`/`row` the per-branch static weight and table
// row, both already in the sorted order.
//
// step_reduce:       out[s] = sum_{j in seg(s)} state_in[gather[j]] * w[j] * row[j]
//                    returns the total over all states.
// posterior_forward: one fused step of the combine pass. With m[j] =
//                    alpha[gather[j]] * w[j] * row[j] and s(j) the segment
//                    owning j, writes sigma[j] = m[j] * beta[s(j)] and
//                    alpha_next[s] = segment sum of m; returns the alpha_next
//                    total and stores the sigma total in *sigma_sum.
// axpy:              y[i] += a * x[i]
struct KernelSet {
    const char* name;
    double (*step_reduce)(const double* state_in, const double* w, const double* row,
                          const std::int32_t* gather, const std::int32_t* seg, int n_states,
                          double* state_out);
    double (*posterior_forward)(const double* alpha, const double* beta, const double* w,
                                const double* row, const std::int32_t* gather,
                                const std::int32_t* seg, int n_states, double* sigma,
                                double* alpha_next, double* sigma_sum);
    void (*axpy)(double a, const double* x, double* y, std::int64_t n);
};

const KernelSet& scalar_kernels();
bool avx2_available();
const KernelSet* avx2_kernels();  // null when unsupported at build time

// Active set: AVX2 when the CPU has it, scalar otherwise. MEMRATE_KERNEL=scalar|avx2
// overrides (used by the equivalence tests).
const KernelSet& active_kernels();

}  // namespace memrate::kern
