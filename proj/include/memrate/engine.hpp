#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memrate/channels.hpp"
#include "memrate/fsmc.hpp"

namespace memrate {

// Per-step branch metric flavor. Clamped modes restrict each step to branches
// compatible with the observed input and include the source factor Q(x_l), so
// a clamped pass computes log Q(x) + log W(y|x) (forward model) or
// log Q(x) + log sum_s prod_l v(b_l, ctx_l) (backward model).
enum class Mode { af_joint, af_clamped, ab_joint, ab_clamped };

inline bool is_ab_mode(Mode m) { return m == Mode::ab_joint || m == Mode::ab_clamped; }
inline bool is_clamped_mode(Mode m) { return m == Mode::af_clamped || m == Mode::ab_clamped; }

struct EvalOptions {
    std::int64_t burnin = 0;          // steps trimmed at each window end
    std::int64_t stderr_block = 10000;  // subsample block length (0 disables blocks)
};

struct ForwardResult {
    double logz = 0.0;           // log total over the full window, nats
    double logz_interior = 0.0;  // increment between the burn-in marks
    std::int64_t n_steps = 0;
    std::int64_t n_interior = 0;
    std::vector<double> block_logz;  // per-block increments inside the interior
    std::int64_t block_len = 0;

    double rate_full() const { return logz / static_cast<double>(n_steps); }
    double rate_interior() const { return logz_interior / static_cast<double>(n_interior); }
};

// Branch posteriors of one window, canonical branch order, one row per step.
struct PosteriorMarginals {
    int n_branches = 0;
    std::vector<double> p;  // [step * n_branches + b]
    double log_z = 0.0;

    double at(std::int64_t step, int b) const {
        return p[static_cast<std::size_t>(step) * n_branches + b];
    }
};

// Trellis inference engine. Branches are re-sorted internally so the hot
// kernels see contiguous segments; all public results use canonical branch ids.
class Engine {
public:
    Engine(const FsmcModel& model, const Source& src);
    Engine(const AuxBackwardParams& params, const Source& src);

    int n_states() const { return S_; }
    int n_branches() const { return B_; }
    std::int64_t n_ctx() const { return n_ctx_; }

    ForwardResult forward_logz(const SampleWindow& w, Mode mode,
                               const EvalOptions& opts = {}) const;

    // Full forward-backward sweep. Into t2_acc (size n_ctx * n_branches,
    // canonical branch index fastest) adds the per-step normalized branch
    // posterior at the step's context, for every interior step. Returns the
    // forward result of the same pass; *n_used gets the accumulated step count.
    ForwardResult accumulate_posteriors(const SampleWindow& w, Mode mode, const EvalOptions& opts,
                                        double* t2_acc, std::int64_t* n_used) const;

    // Materialized per-step posteriors (small windows; tests and debugging).
    PosteriorMarginals posteriors(const SampleWindow& w, Mode mode,
                                  const EvalOptions& opts = {}) const;

    // Pure log-domain forward recursion, kept as a slow cross-check.
    double forward_logz_reference(const SampleWindow& w, Mode mode) const;

    // alpha/beta/posterior tables per step in text form (small windows only)
    std::string debug_dump(const SampleWindow& w, Mode mode) const;

private:
    struct Orientation {
        std::vector<std::int32_t> perm;    // position -> canonical branch id
        std::vector<std::int32_t> gather;  // position -> source state
        std::vector<std::int32_t> seg;     // [S+1] segment offsets by dest state
        std::vector<double> w_joint;       // [B]
        std::vector<double> w_clamp;       // [n_inputs * B]
        std::vector<double> table;         // [n_ctx * B]
    };

    void build(const TrellisSection& ts, const Source& src, const double* trans,
               const double* out_or_v, int n_outputs, std::int64_t n_ctx, int d1, int d2,
               bool ab);
    std::int64_t context_at(const SampleWindow& w, std::int64_t l) const;
    const double* weights(const Orientation& o, Mode mode, int x) const;
    void check_mode(Mode mode) const;

    int S_ = 0;
    int B_ = 0;
    int n_inputs_ = 0;
    int n_outputs_ = 0;
    std::int64_t n_ctx_ = 0;
    int d1_ = 0;
    int d2_ = 0;
    bool ab_ = false;
    Orientation fwd_;  // segments keyed by s_next, gather = s_prev
    Orientation bwd_;  // segments keyed by s_prev, gather = s_next
};

// interior bounds [lo, hi) after clamping the burn-in to the window length
std::pair<std::int64_t, std::int64_t> interior_bounds(std::int64_t n_steps, std::int64_t burnin);

}  // namespace memrate
