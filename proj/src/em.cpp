#include "memrate/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "memrate/parallel.hpp"

namespace memrate {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321;

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// groups of branch ids sharing (s_prev, x)
std::map<std::pair<int, int>, std::vector<int>> transition_groups(const TrellisSection& ts) {
    std::map<std::pair<int, int>, std::vector<int>> g;
    for (const Branch& b : ts.branches) g[{b.s_prev, b.x}].push_back(b.id);
    return g;
}

FsmcModel update_forward(const std::vector<double>& per_branch, const TStats& stats,
                         bool use_t4, const FsmcModel& prev, UpdateFlags* flags) {
    if (!stats.normalized) throw std::logic_error("update: stats must be finalized");
    if (stats.n_ctx != prev.n_outputs)
        throw std::invalid_argument("update: stats context is not a single output symbol");
    UpdateFlags local;
    FsmcModel next = prev;

    for (const auto& [key, ids] : transition_groups(prev.trellis)) {
        double mass = 0.0;
        for (int b : ids) mass += per_branch[static_cast<std::size_t>(b)];
        if (mass <= 0.0) {
            ++local.zero_transition_groups;  // keep previous row
            continue;
        }
        double s = 0.0;
        for (int b : ids) {
            double v = per_branch[static_cast<std::size_t>(b)] / mass;
            if (v < kEpsFloor) v = kEpsFloor;
            next.trans[static_cast<std::size_t>(b)] = v;
            s += v;
        }
        for (int b : ids) next.trans[static_cast<std::size_t>(b)] /= s;
    }

    for (int b = 0; b < prev.trellis.n_branches(); ++b) {
        double mass = 0.0;
        for (int y = 0; y < prev.n_outputs; ++y)
            mass += use_t4 ? stats.t4_at(b, y) : stats.t2_at(b, y);
        if (mass <= 0.0) {
            ++local.zero_output_rows;
            continue;
        }
        for (int y = 0; y < prev.n_outputs; ++y)
            next.out_at(b, y) = (use_t4 ? stats.t4_at(b, y) : stats.t2_at(b, y)) / mass;
    }
    next.floor_and_normalize_out();
    if (flags) *flags = local;
    return next;
}

}  // namespace

FsmcModel update_upper(const TStats& stats, const FsmcModel& prev, UpdateFlags* flags) {
    return update_forward(stats.t1, stats, /*use_t4=*/false, prev, flags);
}

FsmcModel update_diff(const TStats& stats, const FsmcModel& prev, UpdateFlags* flags) {
    return update_forward(stats.t3, stats, /*use_t4=*/true, prev, flags);
}

AuxBackwardParams update_lower(const AuxBackwardParams& vtilde, const TStats& stats, double gamma,
                               UpdateFlags* flags) {
    if (!(gamma > 0.0)) throw std::invalid_argument("update_lower: gamma must be > 0");
    if (!stats.normalized) throw std::logic_error("update_lower: stats must be finalized");
    if (stats.n_ctx != vtilde.n_ctx() || stats.n_branches != vtilde.trellis.n_branches())
        throw std::invalid_argument("update_lower: stats shape mismatch");
    UpdateFlags local;
    AuxBackwardParams next = vtilde;
    const double inv_gamma = 1.0 / gamma;
    for (std::int64_t c = 0; c < stats.n_ctx; ++c)
        for (int b = 0; b < stats.n_branches; ++b) {
            double t2 = stats.t2_at(b, c);
            double t4 = stats.t4_at(b, c);
            if (t2 <= 0.0) {
                ++local.inherited_cells;  // 0/0 cell: keep the previous value
                continue;
            }
            next.v_at(b, c) = std::pow(t4 / t2, inv_gamma) * vtilde.v_at(b, c);
        }
    next.rescale_max_to_one();
    // strict positivity is required for the metric; floor dead cells far below
    // any live value
    for (double& x : next.v)
        if (x < 1e-30) x = 1e-30;
    if (flags) *flags = local;
    return next;
}

std::vector<double> closed_form_t4_pr(const PrChannel& original, int m_hat) {
    const int a = original.trellis.n_inputs();
    const int m = original.memory();
    FsmcModel om = pr_exact_model(original);
    const int k = om.n_outputs;

    TrellisSection aux_ts = build_pr_trellis(m_hat, original.trellis.input_alphabet);
    const int bb = aux_ts.n_branches();
    std::vector<double> t4(static_cast<std::size_t>(k) * bb, 0.0);

    std::int64_t a_pow_mhat = 1;
    for (int i = 0; i < m_hat; ++i) a_pow_mhat *= a;

    if (m > m_hat) {
        // every original branch fixes one assignment of the unseen inputs
        double wgt = 1.0;
        for (int i = 0; i < m + 1; ++i) wgt /= a;
        for (const Branch& ob : original.trellis.branches) {
            int aux_sp = static_cast<int>(ob.s_prev % a_pow_mhat);
            int aux_b = aux_sp * a + ob.x;
            for (int y = 0; y < k; ++y)
                t4[static_cast<std::size_t>(y) * bb + aux_b] += wgt * om.out_at(ob.id, y);
        }
    } else {
        std::int64_t a_pow_m = 1;
        for (int i = 0; i < m; ++i) a_pow_m *= a;
        double wgt = 1.0;
        for (int i = 0; i < m_hat + 1; ++i) wgt /= a;
        for (const Branch& ab : aux_ts.branches) {
            int orig_sp = static_cast<int>(ab.s_prev % a_pow_m);
            int orig_b = orig_sp * a + ab.x;
            for (int y = 0; y < k; ++y)
                t4[static_cast<std::size_t>(y) * bb + ab.id] += wgt * om.out_at(orig_b, y);
        }
    }
    return t4;
}

GammaSchedule gamma_range(double lo, double hi, double step, double extra) {
    GammaSchedule g;
    for (double v = lo; v <= hi + 1e-12; v += step) g.set.push_back(v);
    if (extra > 0.0) g.set.push_back(extra);
    return g;
}

GammaChoice select_gamma(const AuxBackwardParams& vtilde, const TStats& stats,
                         const GammaSchedule& schedule, const Source& src,
                         const SampleWindow& eval_window, const EvalOptions& opts, int threads) {
    if (schedule.set.empty()) throw std::invalid_argument("select_gamma: empty gamma set");
    std::vector<double> gammas = schedule.set;
    std::sort(gammas.begin(), gammas.end());

    const int n = static_cast<int>(gammas.size());
    std::vector<AuxBackwardParams> cand(static_cast<std::size_t>(n));
    std::vector<BoundEstimate> bounds(static_cast<std::size_t>(n));
    parallel_for(n, threads, [&](int i) {
        cand[static_cast<std::size_t>(i)] =
            update_lower(vtilde, stats, gammas[static_cast<std::size_t>(i)]);
        bounds[static_cast<std::size_t>(i)] =
            eval_lower(cand[static_cast<std::size_t>(i)], src, eval_window, opts);
    });

    int best = 0;
    for (int i = 1; i < n; ++i)
        if (bounds[static_cast<std::size_t>(i)].value_nats >=
            bounds[static_cast<std::size_t>(best)].value_nats)
            best = i;  // ascending order, so ties resolve to the larger gamma

    GammaChoice choice;
    choice.gamma = gammas[static_cast<std::size_t>(best)];
    choice.params = std::move(cand[static_cast<std::size_t>(best)]);
    choice.bound = bounds[static_cast<std::size_t>(best)];
    return choice;
}

// --- initialization -----------------------------------------------------------

FsmcModel init_pr_aux(const PrChannel& original, int m_hat, InitMode mode) {
    const int m = original.memory();
    switch (mode) {
        case InitMode::truncation: {
            std::vector<double> h_hat(static_cast<std::size_t>(m_hat) + 1, 0.0);
            for (int i = 0; i <= std::min(m_hat, m); ++i)
                h_hat[static_cast<std::size_t>(i)] = original.h[static_cast<std::size_t>(i)];
            PrChannel aux = make_pr_channel(h_hat, original.sigma, original.quantizer);
            return pr_exact_model(aux);
        }
        case InitMode::averaging: {
            FsmcModel om = pr_exact_model(original);
            FsmcModel aux;
            aux.trellis = build_pr_trellis(m_hat, original.trellis.input_alphabet);
            aux.n_outputs = om.n_outputs;
            aux.trans = natural_transitions(aux.trellis);
            aux.out.assign(static_cast<std::size_t>(aux.trellis.n_branches()) * aux.n_outputs,
                           0.0);
            const int nb = om.trellis.n_branches();
            for (int y = 0; y < om.n_outputs; ++y) {
                double mean = 0.0;
                for (int b = 0; b < nb; ++b) mean += om.out_at(b, y);
                mean /= nb;
                for (int b = 0; b < aux.trellis.n_branches(); ++b) aux.out_at(b, y) = mean;
            }
            aux.floor_and_normalize_out();
            return aux;
        }
        case InitMode::diff_optimized: {
            std::vector<double> t4 = closed_form_t4_pr(original, m_hat);
            FsmcModel aux;
            aux.trellis = build_pr_trellis(m_hat, original.trellis.input_alphabet);
            aux.n_outputs = original.quantizer.n_bins();
            aux.trans = natural_transitions(aux.trellis);
            const int bb = aux.trellis.n_branches();
            aux.out.assign(static_cast<std::size_t>(bb) * aux.n_outputs, 0.0);
            for (int b = 0; b < bb; ++b)
                for (int y = 0; y < aux.n_outputs; ++y)
                    aux.out_at(b, y) = t4[static_cast<std::size_t>(y) * bb + b];
            aux.floor_and_normalize_out();
            return aux;
        }
        case InitMode::natural_fading:
            throw std::invalid_argument("init_pr_aux: natural_fading needs a fading channel");
    }
    throw std::invalid_argument("init_pr_aux: unknown mode");
}

FsmcModel init_fading_natural(const FadingChannel& ch, int k_amp, int k_theta,
                              std::int64_t mc_steps, std::uint64_t seed) {
    if (k_amp < 1 || k_theta < 1) throw std::invalid_argument("init_fading_natural: bad bin counts");
    const double two_pi = 6.283185307179586476925286766559;
    const double sig_r = std::sqrt(ch.sigma_g2);  // Rayleigh scale of |g|

    // equal-probability amplitude edges and in-bin mean amplitudes
    std::vector<double> amp_edge(static_cast<std::size_t>(k_amp) + 1, 0.0);
    for (int i = 1; i < k_amp; ++i)
        amp_edge[static_cast<std::size_t>(i)] =
            sig_r * std::sqrt(-2.0 * std::log(1.0 - static_cast<double>(i) / k_amp));
    amp_edge[static_cast<std::size_t>(k_amp)] = std::numeric_limits<double>::infinity();
    auto amp_centroid = [&](int i) {
        double l = amp_edge[static_cast<std::size_t>(i)];
        double u = amp_edge[static_cast<std::size_t>(i) + 1];
        auto tail = [&](double v) {
            return std::isinf(v) ? 0.0 : v * std::exp(-v * v / (2 * sig_r * sig_r));
        };
        auto erfv = [&](double v) {
            return std::isinf(v) ? 1.0 : std::erf(v / (sig_r * 1.4142135623730951));
        };
        double num = tail(l) - tail(u) +
                     sig_r * std::sqrt(3.14159265358979323846 / 2.0) * (erfv(u) - erfv(l));
        return num * k_amp;  // each bin has probability 1/k_amp
    };

    const int n_states = k_amp * k_theta;
    auto state_of = [&](double re, double im) {
        double a = std::hypot(re, im);
        double th = std::atan2(im, re);  // [-pi, pi]
        int ai = k_amp - 1;
        for (int i = 0; i < k_amp; ++i)
            if (a <= amp_edge[static_cast<std::size_t>(i) + 1]) {
                ai = i;
                break;
            }
        int ti = static_cast<int>((th + 3.14159265358979323846) / (two_pi / k_theta));
        if (ti >= k_theta) ti = k_theta - 1;
        if (ti < 0) ti = 0;
        return ai * k_theta + ti;
    };

    // first-order transition counts from a simulated gain chain
    std::vector<double> counts(static_cast<std::size_t>(n_states) * n_states, 0.5);
    auto gains = simulate_fading_gain(ch, mc_steps, seed);
    int prev = state_of(gains[0].real(), gains[0].imag());
    for (std::int64_t t = 1; t < mc_steps; ++t) {
        int cur = state_of(gains[static_cast<std::size_t>(t)].real(),
                           gains[static_cast<std::size_t>(t)].imag());
        counts[static_cast<std::size_t>(prev) * n_states + cur] += 1.0;
        prev = cur;
    }

    FsmcModel aux;
    aux.trellis = build_full_trellis(n_states, binary_bipolar());
    aux.n_outputs = ch.n_outputs();
    aux.trans.resize(static_cast<std::size_t>(aux.trellis.n_branches()));
    aux.out.resize(static_cast<std::size_t>(aux.trellis.n_branches()) * aux.n_outputs);

    std::vector<double> row_sum(static_cast<std::size_t>(n_states), 0.0);
    for (int sp = 0; sp < n_states; ++sp)
        for (int sn = 0; sn < n_states; ++sn)
            row_sum[static_cast<std::size_t>(sp)] +=
                counts[static_cast<std::size_t>(sp) * n_states + sn];

    const int kdim = ch.quantizer_dim.n_bins();
    const double sn_dim = ch.noise_sigma_dim();
    const double amp_es = std::sqrt(ch.es);
    for (const Branch& b : aux.trellis.branches) {
        aux.trans[static_cast<std::size_t>(b.id)] =
            counts[static_cast<std::size_t>(b.s_prev) * n_states + b.s_next] /
            row_sum[static_cast<std::size_t>(b.s_prev)];
        // output law from the centroid gain of the arriving state
        int ai = b.s_next / k_theta;
        int ti = b.s_next % k_theta;
        double ac = amp_centroid(ai);
        double thc = -3.14159265358979323846 + (ti + 0.5) * (two_pi / k_theta);
        double xv = aux.trellis.input_alphabet.value(b.x);
        double mean_re = xv * amp_es * ac * std::cos(thc);
        double mean_im = xv * amp_es * ac * std::sin(thc);
        for (int yr = 0; yr < kdim; ++yr) {
            double pr = ch.quantizer_dim.bin_prob(yr, mean_re, sn_dim);
            for (int yi = 0; yi < kdim; ++yi)
                aux.out_at(b.id, yr * kdim + yi) =
                    pr * ch.quantizer_dim.bin_prob(yi, mean_im, sn_dim);
        }
    }
    aux.floor_and_normalize_out();
    aux.normalize_trans();
    return aux;
}

// --- optimization loops ---------------------------------------------------------

namespace {

struct StopRule {
    double tol_bits;
    int patience;
    int streak = 0;
    double prev = std::numeric_limits<double>::quiet_NaN();

    bool done(double bound_bits) {
        if (!std::isnan(prev) && std::abs(bound_bits - prev) < tol_bits)
            ++streak;
        else
            streak = 0;
        prev = bound_bits;
        return patience > 0 && streak >= patience;
    }
};

OptUpperResult optimize_forward(const FsmcModel& init, const Source& src, const WindowGen& gen,
                                const OptConfig& cfg, bool diff_objective) {
    OptUpperResult res;
    res.params = init;
    SampleWindow w = gen(0);
    StopRule stop{cfg.tol_bits, cfg.patience};
    auto t0 = std::chrono::steady_clock::now();

    int t = 0;
    for (; t < cfg.max_iters; ++t) {
        if (cfg.fresh_window_each_iter && t > 0) w = gen(static_cast<std::uint64_t>(t));
        Engine eng(res.params, src);
        TStats ts = make_tstats(eng.n_branches(), eng.n_ctx());
        Mode mode = diff_objective ? Mode::af_clamped : Mode::af_joint;
        ForwardResult fr = diff_objective ? accumulate_t34(eng, w, mode, cfg.eval, ts)
                                          : accumulate_t12(eng, w, mode, cfg.eval, ts);

        double n = static_cast<double>(fr.n_interior);
        double bound_nats;
        std::vector<double> blocks;
        if (diff_objective) {
            InteriorLogQ lq = interior_logq(src, w, cfg.eval);
            bound_nats = -(fr.logz_interior - lq.total) / n - cfg.h_cond_nats;
            for (std::size_t i = 0; i < fr.block_logz.size() && i < lq.blocks.size(); ++i)
                blocks.push_back(-(fr.block_logz[i] - lq.blocks[i]) /
                                     static_cast<double>(fr.block_len) -
                                 cfg.h_cond_nats);
        } else {
            bound_nats = -fr.rate_interior() - cfg.h_cond_nats;
            for (double b : fr.block_logz)
                blocks.push_back(-b / static_cast<double>(fr.block_len) - cfg.h_cond_nats);
        }
        double se = 0.0;
        if (blocks.size() > 1) {
            double mean = 0.0;
            for (double b : blocks) mean += b;
            mean /= static_cast<double>(blocks.size());
            double ss = 0.0;
            for (double b : blocks) ss += (b - mean) * (b - mean);
            se = std::sqrt(ss / (static_cast<double>(blocks.size()) *
                                 (static_cast<double>(blocks.size()) - 1)));
        }

        ts.finalize();
        UpdateFlags flags;
        FsmcModel next = diff_objective ? update_diff(ts, res.params, &flags)
                                        : update_upper(ts, res.params, &flags);

        res.trace.iters.push_back({t, bound_nats / kLn2, se / kLn2, 0.0, ms_since(t0),
                                   flags.zero_transition_groups + flags.zero_output_rows});
        res.params = std::move(next);
        if (stop.done(bound_nats / kLn2)) {
            ++t;
            break;
        }
    }

    // bound of the final parameters
    Engine eng(res.params, src);
    if (diff_objective) {
        ForwardResult fr = eng.forward_logz(w, Mode::af_clamped, cfg.eval);
        InteriorLogQ lq = interior_logq(src, w, cfg.eval);
        double v = -(fr.logz_interior - lq.total) / static_cast<double>(fr.n_interior) -
                   cfg.h_cond_nats;
        res.trace.iters.push_back({t, v / kLn2, 0.0, 0.0, ms_since(t0), 0});
    } else {
        ForwardResult fr = eng.forward_logz(w, Mode::af_joint, cfg.eval);
        double v = -fr.rate_interior() - cfg.h_cond_nats;
        res.trace.iters.push_back({t, v / kLn2, 0.0, 0.0, ms_since(t0), 0});
    }
    return res;
}

}  // namespace

OptUpperResult optimize_upper(const FsmcModel& init, const Source& src, const WindowGen& gen,
                              const OptConfig& cfg) {
    return optimize_forward(init, src, gen, cfg, /*diff_objective=*/false);
}

OptUpperResult optimize_diff(const FsmcModel& init, const Source& src, const WindowGen& gen,
                             const OptConfig& cfg) {
    return optimize_forward(init, src, gen, cfg, /*diff_objective=*/true);
}

OptLowerResult optimize_lower(const AuxBackwardParams& init, const Source& src,
                              const WindowGen& gen, const OptConfig& cfg,
                              const std::vector<double>* t4_closed) {
    OptLowerResult res;
    res.params = init;
    SampleWindow w = gen(0);
    GammaSchedule schedule = cfg.gammas;
    if (schedule.set.empty()) schedule.set = {1.0};
    StopRule stop{cfg.tol_bits, cfg.patience};
    auto t0 = std::chrono::steady_clock::now();

    BoundEstimate cur = eval_lower(res.params, src, w, cfg.eval);
    res.trace.iters.push_back({0, cur.value_bits(), cur.stderr_bits(), 0.0, ms_since(t0), 0});

    for (int t = 0; t < cfg.max_iters; ++t) {
        if (cfg.fresh_window_each_iter && t > 0) w = gen(static_cast<std::uint64_t>(t));
        Engine eng(res.params, src);
        TStats ts = make_tstats(eng.n_branches(), eng.n_ctx());
        accumulate_t12(eng, w, Mode::ab_joint, cfg.eval, ts);
        if (t4_closed) {
            if (ts.t4.size() != t4_closed->size())
                throw std::invalid_argument("optimize_lower: closed-form t4 size mismatch");
            ts.t4 = *t4_closed;
            ts.n34 = 0;  // already normalized
        } else {
            accumulate_t34(eng, w, Mode::ab_clamped, cfg.eval, ts);
        }
        ts.finalize();

        GammaChoice choice = select_gamma(res.params, ts, schedule, src, w, cfg.eval, cfg.threads);
        res.params = std::move(choice.params);
        res.trace.iters.push_back({t + 1, choice.bound.value_bits(), choice.bound.stderr_bits(),
                                   choice.gamma, ms_since(t0), 0});
        if (stop.done(choice.bound.value_bits())) break;
    }
    return res;
}

}  // namespace memrate
