#include "memrate/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "memrate/kernels.hpp"

namespace memrate {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321;
// keep per-step sums inside [2^-500, 2^500]; rescaling by powers of two is
// exact, so posteriors and log totals are unaffected
constexpr double kRescaleLo = 0x1p-500;
constexpr double kRescaleHi = 0x1p+500;

struct ScaledVec {
    std::vector<double> v;
    std::int64_t pow2 = 0;  // v_true = v * 2^-pow2

    void maybe_rescale(double sum) {
        if (sum < kRescaleLo) {
            for (double& x : v) x *= 0x1p+500;
            pow2 += 500;
        } else if (sum > kRescaleHi) {
            for (double& x : v) x *= 0x1p-500;
            pow2 -= 500;
        }
    }
    double log_total(double sum) const { return std::log(sum) - static_cast<double>(pow2) * kLn2; }
};

// snapshot bookkeeping for the interior/block log increments
struct MarkTracker {
    std::int64_t lo, hi, block_len;
    double log_lo = 0.0, log_hi = 0.0;
    std::vector<double> block_marks;

    MarkTracker(std::int64_t lo_, std::int64_t hi_, std::int64_t bl) : lo(lo_), hi(hi_), block_len(bl) {}

    void offer(std::int64_t steps_done, double log_total) {
        if (steps_done == lo) log_lo = log_total;
        if (steps_done == hi) log_hi = log_total;
        if (block_len > 0 && steps_done >= lo && steps_done <= hi &&
            (steps_done - lo) % block_len == 0)
            block_marks.push_back(log_total);
    }

    void fill(ForwardResult& r) const {
        r.logz_interior = log_hi - log_lo;
        r.n_interior = hi - lo;
        r.block_len = block_len;
        for (std::size_t i = 1; i < block_marks.size(); ++i)
            r.block_logz.push_back(block_marks[i] - block_marks[i - 1]);
    }
};

}  // namespace

std::pair<std::int64_t, std::int64_t> interior_bounds(std::int64_t n_steps, std::int64_t burnin) {
    std::int64_t lo = std::min(burnin, n_steps / 4);
    return {lo, n_steps - lo};
}

Engine::Engine(const FsmcModel& model, const Source& src) {
    check_forward_params(model);
    build(model.trellis, src, model.trans.data(), model.out.data(), model.n_outputs,
          model.n_outputs, 0, 0, /*ab=*/false);
}

Engine::Engine(const AuxBackwardParams& params, const Source& src) {
    if (params.v.size() != static_cast<std::size_t>(params.trellis.n_branches()) * params.n_ctx())
        throw std::invalid_argument("backward params: v table size mismatch");
    for (double x : params.v)
        if (!(x > 0.0)) throw std::invalid_argument("backward params: v must be strictly positive");
    build(params.trellis, src, nullptr, params.v.data(), params.n_outputs, params.n_ctx(),
          params.d1, params.d2, /*ab=*/true);
}

void Engine::build(const TrellisSection& ts, const Source& src, const double* trans,
                   const double* table_canonical, int n_outputs, std::int64_t n_ctx, int d1,
                   int d2, bool ab) {
    if (src.alphabet.size() != ts.n_inputs())
        throw std::invalid_argument("engine: source and trellis alphabets differ");
    S_ = ts.n_states;
    B_ = ts.n_branches();
    n_inputs_ = ts.n_inputs();
    n_outputs_ = n_outputs;
    n_ctx_ = n_ctx;
    d1_ = d1;
    d2_ = d2;
    ab_ = ab;

    auto make_orient = [&](bool by_next) {
        Orientation o;
        o.perm.resize(static_cast<std::size_t>(B_));
        std::iota(o.perm.begin(), o.perm.end(), 0);
        std::stable_sort(o.perm.begin(), o.perm.end(), [&](std::int32_t a, std::int32_t b) {
            int ka = by_next ? ts.branches[static_cast<std::size_t>(a)].s_next
                             : ts.branches[static_cast<std::size_t>(a)].s_prev;
            int kb = by_next ? ts.branches[static_cast<std::size_t>(b)].s_next
                             : ts.branches[static_cast<std::size_t>(b)].s_prev;
            return ka < kb;
        });
        o.gather.resize(static_cast<std::size_t>(B_));
        o.seg.assign(static_cast<std::size_t>(S_) + 1, 0);
        for (int j = 0; j < B_; ++j) {
            const Branch& b = ts.branches[static_cast<std::size_t>(o.perm[static_cast<std::size_t>(j)])];
            int dest = by_next ? b.s_next : b.s_prev;
            int gsrc = by_next ? b.s_prev : b.s_next;
            o.gather[static_cast<std::size_t>(j)] = gsrc;
            o.seg[static_cast<std::size_t>(dest) + 1]++;
        }
        for (int s = 0; s < S_; ++s) o.seg[static_cast<std::size_t>(s) + 1] += o.seg[static_cast<std::size_t>(s)];

        o.w_joint.resize(static_cast<std::size_t>(B_));
        o.w_clamp.assign(static_cast<std::size_t>(n_inputs_) * B_, 0.0);
        for (int j = 0; j < B_; ++j) {
            const Branch& b = ts.branches[static_cast<std::size_t>(o.perm[static_cast<std::size_t>(j)])];
            double q = src.q[static_cast<std::size_t>(b.x)];
            double wj = ab ? q : q * trans[b.id];
            o.w_joint[static_cast<std::size_t>(j)] = wj;
            o.w_clamp[static_cast<std::size_t>(b.x) * B_ + j] = wj;
        }
        o.table.resize(static_cast<std::size_t>(n_ctx_) * B_);
        for (std::int64_t c = 0; c < n_ctx_; ++c)
            for (int j = 0; j < B_; ++j) {
                int b = o.perm[static_cast<std::size_t>(j)];
                o.table[static_cast<std::size_t>(c) * B_ + j] =
                    table_canonical[static_cast<std::size_t>(b) * n_ctx_ + c];
            }
        return o;
    };
    fwd_ = make_orient(true);
    bwd_ = make_orient(false);
}

void Engine::check_mode(Mode mode) const {
    if (is_ab_mode(mode) != ab_)
        throw std::invalid_argument("engine: mode does not match the model kind");
}

std::int64_t Engine::context_at(const SampleWindow& w, std::int64_t l) const {
    if (!ab_) return w.y_at(l);
    std::int64_t ctx = 0;
    for (int j = -d1_; j <= d2_; ++j)
        ctx = ctx * n_outputs_ + w.y[static_cast<std::size_t>(w.pad_left + l + j)];
    return ctx;
}

const double* Engine::weights(const Orientation& o, Mode mode, int x) const {
    if (is_clamped_mode(mode)) return o.w_clamp.data() + static_cast<std::size_t>(x) * B_;
    return o.w_joint.data();
}

ForwardResult Engine::forward_logz(const SampleWindow& w, Mode mode,
                                   const EvalOptions& opts) const {
    check_mode(mode);
    if (ab_ && (w.pad_left < d1_ || w.pad_right < d2_))
        throw std::invalid_argument("engine: window padding insufficient for (d1,d2)");
    const auto& k = kern::active_kernels();
    const std::int64_t L = w.length();
    auto [lo, hi] = interior_bounds(L, opts.burnin);

    ForwardResult res;
    res.n_steps = L;
    MarkTracker marks(lo, hi, opts.stderr_block);
    marks.offer(0, 0.0);

    ScaledVec alpha{std::vector<double>(static_cast<std::size_t>(S_), 0.0), 0};
    alpha.v[0] = 1.0;
    std::vector<double> next(static_cast<std::size_t>(S_));
    for (std::int64_t l = 0; l < L; ++l) {
        const double* row = fwd_.table.data() + static_cast<std::size_t>(context_at(w, l)) * B_;
        const double* wt = weights(fwd_, mode, is_clamped_mode(mode) ? w.x[static_cast<std::size_t>(l)] : 0);
        double sum = k.step_reduce(alpha.v.data(), wt, row, fwd_.gather.data(), fwd_.seg.data(),
                                   S_, next.data());
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw std::runtime_error("engine: zero or non-finite step metric at step " +
                                     std::to_string(l));
        alpha.v.swap(next);
        marks.offer(l + 1, alpha.log_total(sum));
        if (l + 1 == L) res.logz = alpha.log_total(sum);
        alpha.maybe_rescale(sum);
    }
    marks.fill(res);
    return res;
}

ForwardResult Engine::accumulate_posteriors(const SampleWindow& w, Mode mode,
                                            const EvalOptions& opts, double* t2_acc,
                                            std::int64_t* n_used) const {
    check_mode(mode);
    if (ab_ && (w.pad_left < d1_ || w.pad_right < d2_))
        throw std::invalid_argument("engine: window padding insufficient for (d1,d2)");
    const auto& k = kern::active_kernels();
    const std::int64_t L = w.length();
    auto [lo, hi] = interior_bounds(L, opts.burnin);
    const std::int64_t BL = 2048;  // checkpoint block
    const std::int64_t nblocks = (L + BL - 1) / BL;

    auto row_of = [&](std::int64_t l) {
        return bwd_.table.data() + static_cast<std::size_t>(context_at(w, l)) * B_;
    };
    auto frow_of = [&](std::int64_t l) {
        return fwd_.table.data() + static_cast<std::size_t>(context_at(w, l)) * B_;
    };
    auto x_of = [&](std::int64_t l) {
        return is_clamped_mode(mode) ? w.x[static_cast<std::size_t>(l)] : 0;
    };

    // pass 1: backward sweep, keeping beta at block starts
    std::vector<std::vector<double>> bounds_beta(static_cast<std::size_t>(nblocks) + 1);
    ScaledVec beta{std::vector<double>(static_cast<std::size_t>(S_), 1.0), 0};
    bounds_beta[static_cast<std::size_t>(nblocks)] = beta.v;  // beta at step L (block start convention below)
    std::vector<double> bnext(static_cast<std::size_t>(S_));
    for (std::int64_t l = L - 1; l >= 0; --l) {
        double sum = k.step_reduce(beta.v.data(), weights(bwd_, mode, x_of(l)), row_of(l),
                                   bwd_.gather.data(), bwd_.seg.data(), S_, bnext.data());
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw std::runtime_error("engine: zero or non-finite step metric at step " +
                                     std::to_string(l));
        beta.v.swap(bnext);
        beta.maybe_rescale(sum);
        if (l % BL == 0) bounds_beta[static_cast<std::size_t>(l / BL)] = beta.v;
    }

    // pass 2: forward with per-block recomputed betas
    ForwardResult res;
    res.n_steps = L;
    MarkTracker marks(lo, hi, opts.stderr_block);
    marks.offer(0, 0.0);

    std::vector<double> scratch(static_cast<std::size_t>(n_ctx_) * B_, 0.0);
    std::vector<double> betabuf;
    std::vector<double> sigma(static_cast<std::size_t>(B_));
    ScaledVec alpha{std::vector<double>(static_cast<std::size_t>(S_), 0.0), 0};
    alpha.v[0] = 1.0;
    std::vector<double> anext(static_cast<std::size_t>(S_));
    std::int64_t used = 0;

    for (std::int64_t blk = 0; blk < nblocks; ++blk) {
        const std::int64_t t0 = blk * BL;
        const std::int64_t t1 = std::min(t0 + BL, L);
        const std::int64_t len = t1 - t0;
        betabuf.assign(static_cast<std::size_t>(len + 1) * S_, 0.0);
        std::copy(bounds_beta[static_cast<std::size_t>(blk) + 1].begin(),
                  bounds_beta[static_cast<std::size_t>(blk) + 1].end(),
                  betabuf.begin() + static_cast<std::size_t>(len) * S_);
        for (std::int64_t t = t1 - 1; t > t0; --t) {
            double* dst = betabuf.data() + static_cast<std::size_t>(t - t0 - 1 + 1) * S_;
            const double* src = betabuf.data() + static_cast<std::size_t>(t - t0 + 1) * S_;
            double sum = k.step_reduce(src, weights(bwd_, mode, x_of(t)), row_of(t),
                                       bwd_.gather.data(), bwd_.seg.data(), S_, dst);
            // renormalize within the block to keep the buffer in range
            if (sum < kRescaleLo || sum > kRescaleHi) {
                double f = (sum < kRescaleLo) ? 0x1p+500 : 0x1p-500;
                for (int s = 0; s < S_; ++s) dst[s] *= f;
            }
        }

        for (std::int64_t t = t0; t < t1; ++t) {
            const double* bet = betabuf.data() + static_cast<std::size_t>(t - t0 + 1) * S_;
            double sig_sum = 0.0;
            double asum = k.posterior_forward(alpha.v.data(), bet, weights(fwd_, mode, x_of(t)),
                                              frow_of(t), fwd_.gather.data(), fwd_.seg.data(), S_,
                                              sigma.data(), anext.data(), &sig_sum);
            if (!(asum > 0.0) || !std::isfinite(asum))
                throw std::runtime_error("engine: zero or non-finite step metric at step " +
                                         std::to_string(t));
            if (t >= lo && t < hi) {
                if (!(sig_sum > 0.0) || !std::isfinite(sig_sum))
                    throw std::runtime_error("engine: degenerate posterior at step " +
                                             std::to_string(t));
                k.axpy(1.0 / sig_sum, sigma.data(),
                       scratch.data() + static_cast<std::size_t>(context_at(w, t)) * B_, B_);
                ++used;
            }
            alpha.v.swap(anext);
            marks.offer(t + 1, alpha.log_total(asum));
            if (t + 1 == L) res.logz = alpha.log_total(asum);
            alpha.maybe_rescale(asum);
        }
    }
    marks.fill(res);

    for (std::int64_t c = 0; c < n_ctx_; ++c)
        for (int j = 0; j < B_; ++j)
            t2_acc[static_cast<std::size_t>(c) * B_ + fwd_.perm[static_cast<std::size_t>(j)]] +=
                scratch[static_cast<std::size_t>(c) * B_ + j];
    if (n_used) *n_used += used;
    return res;
}

PosteriorMarginals Engine::posteriors(const SampleWindow& w, Mode mode,
                                      const EvalOptions& opts) const {
    check_mode(mode);
    const auto& k = kern::active_kernels();
    const std::int64_t L = w.length();

    PosteriorMarginals pm;
    pm.n_branches = B_;
    pm.p.assign(static_cast<std::size_t>(L) * B_, 0.0);

    // full beta storage; this path is for short windows
    std::vector<double> betas(static_cast<std::size_t>(L + 1) * S_, 0.0);
    for (int s = 0; s < S_; ++s) betas[static_cast<std::size_t>(L) * S_ + s] = 1.0;
    auto x_of = [&](std::int64_t l) {
        return is_clamped_mode(mode) ? w.x[static_cast<std::size_t>(l)] : 0;
    };
    for (std::int64_t l = L - 1; l >= 0; --l) {
        const double* row = bwd_.table.data() + static_cast<std::size_t>(context_at(w, l)) * B_;
        double* dst = betas.data() + static_cast<std::size_t>(l) * S_;
        double sum = k.step_reduce(betas.data() + static_cast<std::size_t>(l + 1) * S_,
                                   weights(bwd_, mode, x_of(l)), row, bwd_.gather.data(),
                                   bwd_.seg.data(), S_, dst);
        if (!(sum > 0.0)) throw std::runtime_error("engine: zero step metric (backward)");
        for (int s = 0; s < S_; ++s) dst[s] /= sum;
    }

    ScaledVec alpha{std::vector<double>(static_cast<std::size_t>(S_), 0.0), 0};
    alpha.v[0] = 1.0;
    std::vector<double> anext(static_cast<std::size_t>(S_));
    std::vector<double> sigma(static_cast<std::size_t>(B_));
    for (std::int64_t l = 0; l < L; ++l) {
        const double* row = fwd_.table.data() + static_cast<std::size_t>(context_at(w, l)) * B_;
        double sig_sum = 0.0;
        double asum = k.posterior_forward(alpha.v.data(),
                                          betas.data() + static_cast<std::size_t>(l + 1) * S_,
                                          weights(fwd_, mode, x_of(l)), row, fwd_.gather.data(),
                                          fwd_.seg.data(), S_, sigma.data(), anext.data(),
                                          &sig_sum);
        if (!(asum > 0.0) || !(sig_sum > 0.0))
            throw std::runtime_error("engine: zero step metric at step " + std::to_string(l));
        for (int j = 0; j < B_; ++j)
            pm.p[static_cast<std::size_t>(l) * B_ + fwd_.perm[static_cast<std::size_t>(j)]] =
                sigma[static_cast<std::size_t>(j)] / sig_sum;
        alpha.v.swap(anext);
        if (l + 1 == L) pm.log_z = alpha.log_total(asum);
        alpha.maybe_rescale(asum);
    }
    (void)opts;
    return pm;
}

double Engine::forward_logz_reference(const SampleWindow& w, Mode mode) const {
    check_mode(mode);
    const std::int64_t L = w.length();
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> la(static_cast<std::size_t>(S_), neg_inf);
    la[0] = 0.0;
    std::vector<double> lnext(static_cast<std::size_t>(S_));
    for (std::int64_t l = 0; l < L; ++l) {
        const double* row = fwd_.table.data() + static_cast<std::size_t>(context_at(w, l)) * B_;
        const double* wt = weights(fwd_, mode, is_clamped_mode(mode) ? w.x[static_cast<std::size_t>(l)] : 0);
        std::fill(lnext.begin(), lnext.end(), neg_inf);
        for (int j = 0; j < B_; ++j) {
            double g = wt[j] * row[j];
            if (g <= 0.0) continue;
            // destination state of position j is its segment owner
            int s = 0;
            while (fwd_.seg[static_cast<std::size_t>(s) + 1] <= j) ++s;
            double cand = la[static_cast<std::size_t>(fwd_.gather[static_cast<std::size_t>(j)])] + std::log(g);
            double& dst = lnext[static_cast<std::size_t>(s)];
            if (cand == neg_inf) continue;
            if (dst == neg_inf)
                dst = cand;
            else {
                double m = std::max(dst, cand);
                dst = m + std::log(std::exp(dst - m) + std::exp(cand - m));
            }
        }
        la.swap(lnext);
    }
    double m = neg_inf;
    for (double v : la) m = std::max(m, v);
    if (m == neg_inf) throw std::runtime_error("engine: zero window likelihood");
    double acc = 0.0;
    for (double v : la)
        if (v != neg_inf) acc += std::exp(v - m);
    return m + std::log(acc);
}

std::string Engine::debug_dump(const SampleWindow& w, Mode mode) const {
    PosteriorMarginals pm = posteriors(w, mode);
    std::ostringstream os;
    os.precision(12);
    os << "# steps=" << w.length() << " branches=" << B_ << " log_z=" << pm.log_z << "\n";
    for (std::int64_t l = 0; l < w.length(); ++l) {
        os << l;
        for (int b = 0; b < B_; ++b) os << ' ' << pm.at(l, b);
        os << "\n";
    }
    return os.str();
}

}  // namespace memrate
