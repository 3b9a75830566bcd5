#pragma once

#include <vector>

namespace memrate {

// Scalar quantizer given by strictly increasing thresholds t_1 < ... < t_{K-1}.
// Bin k covers (t_k, t_{k+1}] with t_0 = -inf, t_K = +inf; values exactly on a
// threshold go to the lower bin.
struct Quantizer {
    std::vector<double> thresholds;

    int n_bins() const { return static_cast<int>(thresholds.size()) + 1; }
    int quantize(double v) const;

    // P(bin = k) for a Normal(mean, sigma^2) input
    double bin_prob(int k, double mean, double sigma) const;
};

Quantizer make_quantizer(std::vector<double> thresholds);

// thresholds at {0, +-step, +-2*step, ...} spanning +-max_mag (inclusive)
Quantizer symmetric_quantizer(double step, double max_mag);

}  // namespace memrate
