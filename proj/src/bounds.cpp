#include "memrate/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace memrate {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321;

// standard error of the interior mean from per-block means
double block_stderr(const std::vector<double>& block_vals) {
    const std::size_t n = block_vals.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : block_vals) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : block_vals) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (static_cast<double>(n) * (static_cast<double>(n) - 1)));
}

BoundEstimate finish(BoundKind kind, const SampleWindow& w, double value,
                     const std::vector<double>& block_vals);

}  // namespace

InteriorLogQ interior_logq(const Source& src, const SampleWindow& w, const EvalOptions& opts) {
    auto [lo, hi] = interior_bounds(w.length(), opts.burnin);
    InteriorLogQ r;
    double cur = 0.0;
    std::int64_t in_block = 0;
    for (std::int64_t l = lo; l < hi; ++l) {
        double lq = src.log_symbol_prob(w.x[static_cast<std::size_t>(l)]);
        r.total += lq;
        if (opts.stderr_block > 0) {
            cur += lq;
            if (++in_block == opts.stderr_block) {
                r.blocks.push_back(cur);
                cur = 0.0;
                in_block = 0;
            }
        }
    }
    return r;
}

BoundEstimate combine_lower(const ForwardResult& clamped, const ForwardResult& joint,
                            const InteriorLogQ& lq, const SampleWindow& w) {
    double n = static_cast<double>(clamped.n_interior);
    double value = (clamped.logz_interior - joint.logz_interior - lq.total) / n;
    std::vector<double> blocks;
    for (std::size_t i = 0; i < clamped.block_logz.size() && i < joint.block_logz.size() &&
                            i < lq.blocks.size();
         ++i)
        blocks.push_back((clamped.block_logz[i] - joint.block_logz[i] - lq.blocks[i]) /
                         static_cast<double>(clamped.block_len));
    return finish(BoundKind::lower, w, value, blocks);
}

namespace {

BoundEstimate finish(BoundKind kind, const SampleWindow& w, double value,
                     const std::vector<double>& block_vals) {
    BoundEstimate e;
    e.kind = kind;
    e.value_nats = value;
    e.stderr_nats = block_stderr(block_vals);
    e.n_half = w.n_half;
    e.seed = w.seed;
    return e;
}

}  // namespace

double BoundEstimate::value_bits() const { return value_nats / kLn2; }
double BoundEstimate::stderr_bits() const { return stderr_nats / kLn2; }

std::string bound_kind_name(BoundKind k) {
    switch (k) {
        case BoundKind::rate: return "rate";
        case BoundKind::upper: return "upper";
        case BoundKind::lower: return "lower";
        case BoundKind::diff: return "diff";
        case BoundKind::h_cond: return "h_cond";
        case BoundKind::csi: return "csi";
    }
    return "?";
}

BoundEstimate estimate_rate(const FsmcModel& original, const Source& src, const SampleWindow& w,
                            const EvalOptions& opts) {
    Engine eng(original, src);
    ForwardResult cl = eng.forward_logz(w, Mode::af_clamped, opts);
    ForwardResult jo = eng.forward_logz(w, Mode::af_joint, opts);
    InteriorLogQ lq = interior_logq(src, w, opts);
    double n = static_cast<double>(cl.n_interior);
    double value = (cl.logz_interior - lq.total - jo.logz_interior) / n;
    std::vector<double> blocks;
    for (std::size_t i = 0; i < cl.block_logz.size() && i < jo.block_logz.size() &&
                            i < lq.blocks.size();
         ++i)
        blocks.push_back((cl.block_logz[i] - lq.blocks[i] - jo.block_logz[i]) /
                         static_cast<double>(cl.block_len));
    return finish(BoundKind::rate, w, value, blocks);
}

BoundEstimate eval_upper(const FsmcModel& aux, const Source& src, const SampleWindow& w,
                         double h_cond_nats, const EvalOptions& opts) {
    Engine eng(aux, src);
    ForwardResult jo = eng.forward_logz(w, Mode::af_joint, opts);
    double value = -jo.rate_interior() - h_cond_nats;
    std::vector<double> blocks;
    for (double b : jo.block_logz)
        blocks.push_back(-b / static_cast<double>(jo.block_len) - h_cond_nats);
    return finish(BoundKind::upper, w, value, blocks);
}

BoundEstimate eval_lower(const AuxBackwardParams& ab, const Source& src, const SampleWindow& w,
                         const EvalOptions& opts) {
    Engine eng(ab, src);
    ForwardResult cl = eng.forward_logz(w, Mode::ab_clamped, opts);
    ForwardResult jo = eng.forward_logz(w, Mode::ab_joint, opts);
    InteriorLogQ lq = interior_logq(src, w, opts);
    double n = static_cast<double>(cl.n_interior);
    double value = (cl.logz_interior - jo.logz_interior - lq.total) / n;
    std::vector<double> blocks;
    for (std::size_t i = 0; i < cl.block_logz.size() && i < jo.block_logz.size() &&
                            i < lq.blocks.size();
         ++i)
        blocks.push_back((cl.block_logz[i] - jo.block_logz[i] - lq.blocks[i]) /
                         static_cast<double>(cl.block_len));
    BoundEstimate e = finish(BoundKind::lower, w, value, blocks);
    return e;
}

BoundEstimate eval_diff(const FsmcModel& aux, const FsmcModel& original, const Source& src,
                        const SampleWindow& w, const EvalOptions& opts) {
    Engine eo(original, src);
    Engine ea(aux, src);
    ForwardResult ocl = eo.forward_logz(w, Mode::af_clamped, opts);
    ForwardResult acl = ea.forward_logz(w, Mode::af_clamped, opts);
    // the log Q(x) terms of the two clamped passes cancel
    double n = static_cast<double>(ocl.n_interior);
    double value = (ocl.logz_interior - acl.logz_interior) / n;
    std::vector<double> blocks;
    for (std::size_t i = 0; i < ocl.block_logz.size() && i < acl.block_logz.size(); ++i)
        blocks.push_back((ocl.block_logz[i] - acl.block_logz[i]) /
                         static_cast<double>(ocl.block_len));
    return finish(BoundKind::diff, w, value, blocks);
}

SharedBounds eval_bounds_shared(const FsmcModel& original, const FsmcModel& aux,
                                const Source& src, const SampleWindow& w,
                                const EvalOptions& opts) {
    Engine eo(original, src);
    Engine ea(aux, src);
    ForwardResult ocl = eo.forward_logz(w, Mode::af_clamped, opts);
    ForwardResult ajo = ea.forward_logz(w, Mode::af_joint, opts);
    ForwardResult acl = ea.forward_logz(w, Mode::af_clamped, opts);
    InteriorLogQ lq = interior_logq(src, w, opts);
    const double n = static_cast<double>(ocl.n_interior);

    SharedBounds sb;
    sb.h_cond_emp_nats = -(ocl.logz_interior - lq.total) / n;

    double upper = (-ajo.logz_interior + ocl.logz_interior - lq.total) / n;
    double lower = (acl.logz_interior - ajo.logz_interior - lq.total) / n;
    double diff = (ocl.logz_interior - acl.logz_interior) / n;

    std::vector<double> bu, bl, bd;
    const double len = static_cast<double>(ocl.block_len);
    for (std::size_t i = 0; i < ocl.block_logz.size() && i < ajo.block_logz.size() &&
                            i < acl.block_logz.size() && i < lq.blocks.size();
         ++i) {
        bu.push_back((-ajo.block_logz[i] + ocl.block_logz[i] - lq.blocks[i]) / len);
        bl.push_back((acl.block_logz[i] - ajo.block_logz[i] - lq.blocks[i]) / len);
        bd.push_back((ocl.block_logz[i] - acl.block_logz[i]) / len);
    }
    sb.upper = finish(BoundKind::upper, w, upper, bu);
    sb.lower_special = finish(BoundKind::lower, w, lower, bl);
    sb.diff = finish(BoundKind::diff, w, diff, bd);
    return sb;
}

AuxBackwardParams backward_from_forward(const FsmcModel& af, int d1, int d2) {
    AuxBackwardParams ab;
    ab.trellis = af.trellis;
    ab.n_outputs = af.n_outputs;
    ab.d1 = d1;
    ab.d2 = d2;
    const std::int64_t nc = ab.n_ctx();
    const int k = af.n_outputs;
    std::int64_t tail = 1;
    for (int i = 0; i < d2; ++i) tail *= k;
    ab.v.resize(static_cast<std::size_t>(af.trellis.n_branches()) * nc);
    for (int b = 0; b < af.trellis.n_branches(); ++b)
        for (std::int64_t c = 0; c < nc; ++c) {
            int y_center = static_cast<int>((c / tail) % k);
            double val = af.trans[static_cast<std::size_t>(b)] * af.out_at(b, y_center);
            ab.v_at(b, c) = val > kEpsFloor ? val : kEpsFloor;
        }
    return ab;
}

}  // namespace memrate
