#include "memrate/kernels.hpp"

namespace memrate::kern {

namespace {

double step_reduce_scalar(const double* state_in, const double* w, const double* row,
                          const std::int32_t* gather, const std::int32_t* seg, int n_states,
                          double* state_out) {
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
        double acc = 0.0;
        for (std::int32_t j = seg[s]; j < seg[s + 1]; ++j)
            acc += state_in[gather[j]] * w[j] * row[j];
        state_out[s] = acc;
        total += acc;
    }
    return total;
}

double posterior_forward_scalar(const double* alpha, const double* beta, const double* w,
                                const double* row, const std::int32_t* gather,
                                const std::int32_t* seg, int n_states, double* sigma,
                                double* alpha_next, double* sigma_sum) {
    double atotal = 0.0;
    double stotal = 0.0;
    for (int s = 0; s < n_states; ++s) {
        const double bs = beta[s];
        double acc = 0.0;
        for (std::int32_t j = seg[s]; j < seg[s + 1]; ++j) {
            double m = alpha[gather[j]] * w[j] * row[j];
            acc += m;
            double v = m * bs;
            sigma[j] = v;
            stotal += v;
        }
        alpha_next[s] = acc;
        atotal += acc;
    }
    *sigma_sum = stotal;
    return atotal;
}

void axpy_scalar(double a, const double* x, double* y, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

const KernelSet& scalar_kernels() {
    static const KernelSet ks{"scalar", step_reduce_scalar, posterior_forward_scalar,
                              axpy_scalar};
    return ks;
}

}  // namespace memrate::kern
