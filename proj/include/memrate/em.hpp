#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "memrate/bounds.hpp"
#include "memrate/channels.hpp"
#include "memrate/tstats.hpp"

namespace memrate {

struct UpdateFlags {
    int zero_transition_groups = 0;  // (s_prev, x) groups with no posterior mass
    int zero_output_rows = 0;        // branches with no posterior mass
    int inherited_cells = 0;         // backward cells kept at their previous value
};

// What* (s|s_p,x) prop. to t1, What*(y|b) prop. to t2, groups renormalized and
// output rows floored. Groups with zero mass keep the previous parameters.
FsmcModel update_upper(const TStats& stats, const FsmcModel& prev, UpdateFlags* flags = nullptr);
// same update driven by the clamped statistics t3/t4
FsmcModel update_diff(const TStats& stats, const FsmcModel& prev, UpdateFlags* flags = nullptr);

// v*(b, y^D) = (t4/t2)^(1/gamma) * v(b, y^D), then rescaled so max = 1.
// Cells never visited (t2 = 0) inherit the previous value.
AuxBackwardParams update_lower(const AuxBackwardParams& vtilde, const TStats& stats, double gamma,
                               UpdateFlags* flags = nullptr);

// Exact clamped statistics for a partial-response original and a memory-m_hat
// partial-response auxiliary sharing the quantizer: enumerates the channel
// inputs the auxiliary branch does not determine. Layout [y * B + b], total 1.
std::vector<double> closed_form_t4_pr(const PrChannel& original, int m_hat);

struct GammaSchedule {
    std::vector<double> set;  // candidate gammas, all > 0
    enum class Policy { fixed, best_of_set } policy = Policy::best_of_set;
};

GammaSchedule gamma_range(double lo, double hi, double step, double extra = 0.0);

struct GammaChoice {
    double gamma = 0.0;
    AuxBackwardParams params;
    BoundEstimate bound;
};

// Try every candidate update and keep the one with the highest lower bound on
// the evaluation window; ties go to the larger (more conservative) gamma.
GammaChoice select_gamma(const AuxBackwardParams& vtilde, const TStats& stats,
                         const GammaSchedule& schedule, const Source& src,
                         const SampleWindow& eval_window, const EvalOptions& opts,
                         int threads = 1);

// --- initialization ---------------------------------------------------------

enum class InitMode { truncation, averaging, diff_optimized, natural_fading };

// Forward auxiliary for a PR original: PR trellis of memory m_hat with natural
// transitions; the output table depends on the method.
FsmcModel init_pr_aux(const PrChannel& original, int m_hat, InitMode mode);

// Amplitude/phase-bin auxiliary for the fading channel. Amplitude bins are
// equal-probability Rayleigh quantiles, phase bins uniform; transitions are
// estimated from mc_steps simulated gain steps, outputs from bin-centroid gains.
FsmcModel init_fading_natural(const FadingChannel& ch, int k_amp, int k_theta,
                              std::int64_t mc_steps, std::uint64_t seed);

// --- optimization loops -------------------------------------------------------

using WindowGen = std::function<SampleWindow(std::uint64_t window_index)>;

struct OptIterRec {
    int iter = 0;
    double bound_bits = 0.0;
    double stderr_bits = 0.0;
    double gamma = 0.0;  // 0 when not applicable
    double wall_ms = 0.0;
    int flagged = 0;
};

struct OptTrace {
    std::vector<OptIterRec> iters;
};

struct OptConfig {
    int max_iters = 50;
    double tol_bits = 1e-6;
    int patience = 20;
    bool fresh_window_each_iter = false;  // default: one fixed window for all iterations
    EvalOptions eval{1000, 10000};
    double h_cond_nats = 0.0;  // reference conditional entropy for upper/diff values
    GammaSchedule gammas;
    int threads = 1;
};

struct OptUpperResult {
    OptTrace trace;
    FsmcModel params;
};

// iterate t1/t2 accumulation + update; the recorded bound at iteration t is
// the upper bound of the parameters entering that iteration
OptUpperResult optimize_upper(const FsmcModel& init, const Source& src, const WindowGen& gen,
                              const OptConfig& cfg);

// same loop on the clamped statistics, driving the difference function down
OptUpperResult optimize_diff(const FsmcModel& init, const Source& src, const WindowGen& gen,
                             const OptConfig& cfg);

struct OptLowerResult {
    OptTrace trace;
    AuxBackwardParams params;
};

// lower-bound ascent with per-iteration gamma selection; t4_closed, when given,
// replaces the clamped estimation pass (data-controllable auxiliaries)
OptLowerResult optimize_lower(const AuxBackwardParams& init, const Source& src,
                              const WindowGen& gen, const OptConfig& cfg,
                              const std::vector<double>* t4_closed = nullptr);

}  // namespace memrate
