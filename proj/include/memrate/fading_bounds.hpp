#pragma once

#include <cstdint>

#include "memrate/bounds.hpp"
#include "memrate/channels.hpp"

namespace memrate {

struct EntropyLbConfig {
    int delay = 3;        // conditioning lag D, 1..3 supported
    int quad_nodes = 32;  // Gauss-Hermite nodes per dimension, doubled until stable
    double refine_tol_nats = 1e-4;
    int max_refine = 3;
};

struct EntropyLbResult {
    BoundEstimate bound;        // kind h_cond, nats per channel use (both dimensions)
    int nodes_used = 0;
    bool converged = true;      // successive node counts agreed within tolerance
    double last_change = 0.0;
};

// Lower bound on H(Y|X) for the quantized Gauss-Markov fading channel by
// conditioning on the channel gain `delay` steps back. Computed per real
// dimension with nested quadrature over the missing gains and doubled.
EntropyLbResult fading_entropy_lb(const FadingChannel& ch, const EntropyLbConfig& cfg);

// Exact H(Y|X) of the memoryless (alpha = 0) quantized channel, for checks.
double fading_entropy_memoryless(const FadingChannel& ch, int quad_nodes = 96);

// Perfect-CSI upper bound: Monte-Carlo average over the stationary gain of the
// exact BPSK mutual information of the per-gain quantized complex-AWGN channel.
BoundEstimate fading_csi_upper(const FadingChannel& ch, std::int64_t n_samples,
                               std::uint64_t seed);

// Gauss-Hermite abscissas/weights for integrals against exp(-z^2)
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace memrate
