#pragma once

#include <cstdint>
#include <vector>

#include "memrate/engine.hpp"

namespace memrate {

// Expected-count tables accumulated from per-step branch posteriors.
// t2/t4 are laid out [ctx * n_branches + b]; contexts are single outputs for
// forward-model statistics and whole context words for backward-model ones.
// t1/t3 are the per-branch marginals, filled by finalize(), which also divides
// by the accumulated step counts so each table sums to one.
struct TStats {
    int n_branches = 0;
    std::int64_t n_ctx = 0;
    std::vector<double> t2, t4;
    std::vector<double> t1, t3;
    std::int64_t n12 = 0, n34 = 0;
    bool normalized = false;

    double t2_at(int b, std::int64_t c) const {
        return t2[static_cast<std::size_t>(c) * n_branches + b];
    }
    double t4_at(int b, std::int64_t c) const {
        return t4[static_cast<std::size_t>(c) * n_branches + b];
    }

    void finalize();
};

TStats make_tstats(int n_branches, std::int64_t n_ctx);

// One forward-backward pass with joint metrics; adds the posterior of every
// interior step into t2. Returns the pass's forward result (log Z reusable by
// the caller).
ForwardResult accumulate_t12(const Engine& eng, const SampleWindow& w, Mode joint_mode,
                             const EvalOptions& opts, TStats& ts);

// Same with input-clamped metrics, filling t4.
ForwardResult accumulate_t34(const Engine& eng, const SampleWindow& w, Mode clamped_mode,
                             const EvalOptions& opts, TStats& ts);

}  // namespace memrate
