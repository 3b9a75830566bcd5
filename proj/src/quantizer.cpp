#include "memrate/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memrate {

namespace {
double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }
}  // namespace

int Quantizer::quantize(double v) const {
    // first threshold strictly below v  ->  bin index
    return static_cast<int>(std::lower_bound(thresholds.begin(), thresholds.end(), v) -
                            thresholds.begin());
}

double Quantizer::bin_prob(int k, double mean, double sigma) const {
    const int kmax = n_bins() - 1;
    double lo = (k == 0) ? -1.0 : normal_cdf((thresholds[static_cast<std::size_t>(k - 1)] - mean) / sigma);
    double hi = (k == kmax) ? 1.0 : normal_cdf((thresholds[static_cast<std::size_t>(k)] - mean) / sigma);
    if (k == 0) lo = 0.0;
    double p = hi - lo;
    return p > 0.0 ? p : 0.0;
}

Quantizer make_quantizer(std::vector<double> thresholds) {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (!(thresholds[i - 1] < thresholds[i]))
            throw std::invalid_argument("make_quantizer: thresholds must be strictly increasing");
    return Quantizer{std::move(thresholds)};
}

Quantizer symmetric_quantizer(double step, double max_mag) {
    if (step <= 0.0 || max_mag < 0.0)
        throw std::invalid_argument("symmetric_quantizer: bad step or magnitude");
    std::vector<double> t;
    int n = static_cast<int>(std::floor(max_mag / step + 1e-9));
    for (int k = -n; k <= n; ++k) t.push_back(k * step);
    return make_quantizer(std::move(t));
}

}  // namespace memrate
