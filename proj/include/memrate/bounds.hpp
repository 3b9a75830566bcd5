#pragma once

#include <cstdint>
#include <string>

#include "memrate/channels.hpp"
#include "memrate/engine.hpp"
#include "memrate/fsmc.hpp"

namespace memrate {

enum class BoundKind { rate, upper, lower, diff, h_cond, csi };

struct BoundEstimate {
    BoundKind kind = BoundKind::rate;
    double value_nats = 0.0;
    double stderr_nats = 0.0;
    std::int64_t n_half = 0;
    std::uint64_t seed = 0;

    double value_bits() const;
    double stderr_bits() const;
};

std::string bound_kind_name(BoundKind k);

// Window-based estimators. All per-use quantities are averaged over the
// burn-in-trimmed interior; the standard error comes from block subsampling.

// (1/2N) [log W(y|x) - log (QW)(y)] on the original finite-state channel
BoundEstimate estimate_rate(const FsmcModel& original, const Source& src, const SampleWindow& w,
                            const EvalOptions& opts = {});

// -(1/2N) log (Q What)(y) - h_cond. h_cond is the exact conditional entropy of
// the original channel when available, or a lower bound on it (which still
// yields a valid upper bound).
BoundEstimate eval_upper(const FsmcModel& aux, const Source& src, const SampleWindow& w,
                         double h_cond_nats, const EvalOptions& opts = {});

// (1/2N) [log sum_s prod v  -  log sum_{s,x} Q prod v]
BoundEstimate eval_lower(const AuxBackwardParams& ab, const Source& src, const SampleWindow& w,
                         const EvalOptions& opts = {});

// (1/2N) [log W(y|x) - log What(y|x)], a KL rate, >= 0 in expectation
BoundEstimate eval_diff(const FsmcModel& aux, const FsmcModel& original, const Source& src,
                        const SampleWindow& w, const EvalOptions& opts = {});

// Three passes on one window (original clamped, aux joint, aux clamped) so
// that diff == upper - lower_special holds exactly, not just statistically.
// upper uses the empirical conditional entropy from the original clamped pass.
struct SharedBounds {
    BoundEstimate upper;
    BoundEstimate lower_special;
    BoundEstimate diff;
    double h_cond_emp_nats = 0.0;
};

SharedBounds eval_bounds_shared(const FsmcModel& original, const FsmcModel& aux,
                                const Source& src, const SampleWindow& w,
                                const EvalOptions& opts = {});

// backward model with v(b, y^D) = trans(b) * out(b, center(y^D)); the usual
// starting point derived from a forward model
AuxBackwardParams backward_from_forward(const FsmcModel& af, int d1 = 0, int d2 = 0);

// sum (and per-block sums) of log Q(x_l) over the interior of a window
struct InteriorLogQ {
    double total = 0.0;
    std::vector<double> blocks;
};

InteriorLogQ interior_logq(const Source& src, const SampleWindow& w, const EvalOptions& opts);

// lower-bound estimate assembled from already-computed clamped/joint passes
BoundEstimate combine_lower(const ForwardResult& clamped, const ForwardResult& joint,
                            const InteriorLogQ& lq, const SampleWindow& w);

}  // namespace memrate
