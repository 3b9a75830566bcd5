#include "memrate/tstats.hpp"

#include <stdexcept>

namespace memrate {

TStats make_tstats(int n_branches, std::int64_t n_ctx) {
    TStats ts;
    ts.n_branches = n_branches;
    ts.n_ctx = n_ctx;
    ts.t2.assign(static_cast<std::size_t>(n_ctx) * n_branches, 0.0);
    ts.t4.assign(static_cast<std::size_t>(n_ctx) * n_branches, 0.0);
    ts.t1.assign(static_cast<std::size_t>(n_branches), 0.0);
    ts.t3.assign(static_cast<std::size_t>(n_branches), 0.0);
    return ts;
}

void TStats::finalize() {
    if (normalized) throw std::logic_error("TStats: already normalized");
    if (n12 > 0)
        for (double& v : t2) v /= static_cast<double>(n12);
    if (n34 > 0)
        for (double& v : t4) v /= static_cast<double>(n34);
    std::fill(t1.begin(), t1.end(), 0.0);
    std::fill(t3.begin(), t3.end(), 0.0);
    for (std::int64_t c = 0; c < n_ctx; ++c)
        for (int b = 0; b < n_branches; ++b) {
            t1[static_cast<std::size_t>(b)] += t2_at(b, c);
            t3[static_cast<std::size_t>(b)] += t4_at(b, c);
        }
    normalized = true;
}

ForwardResult accumulate_t12(const Engine& eng, const SampleWindow& w, Mode joint_mode,
                             const EvalOptions& opts, TStats& ts) {
    if (is_clamped_mode(joint_mode))
        throw std::invalid_argument("accumulate_t12: expected a joint mode");
    if (ts.normalized) throw std::logic_error("accumulate_t12: stats already normalized");
    return eng.accumulate_posteriors(w, joint_mode, opts, ts.t2.data(), &ts.n12);
}

ForwardResult accumulate_t34(const Engine& eng, const SampleWindow& w, Mode clamped_mode,
                             const EvalOptions& opts, TStats& ts) {
    if (!is_clamped_mode(clamped_mode))
        throw std::invalid_argument("accumulate_t34: expected a clamped mode");
    if (ts.normalized) throw std::logic_error("accumulate_t34: stats already normalized");
    return eng.accumulate_posteriors(w, clamped_mode, opts, ts.t4.data(), &ts.n34);
}

}  // namespace memrate
