#include "memrate/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "memrate/bounds.hpp"
#include "memrate/em.hpp"
#include "memrate/fading_bounds.hpp"
#include "memrate/parallel.hpp"
#include "memrate/rng.hpp"
#include "memrate/soblex.hpp"

namespace memrate {

int default_threads() {
    if (const char* env = std::getenv("MEMRATE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

namespace fs = std::filesystem;

struct CsvSink {
    std::string path;
    bool fresh = false;

    void open_run(const std::string& header, const std::string& hash, int run_id) {
        bool existed = fs::exists(path);
        std::ofstream os(path, std::ios::app);
        if (!existed) os << "# memrate results\n" << header << "\n";
        os << "# run id=" << run_id << " config_hash=" << hash << "\n";
    }
    void row(const std::string& line) {
        std::ofstream os(path, std::ios::app);
        os << line << "\n";
    }
};

int next_run_id(const std::string& path) {
    std::ifstream is(path);
    if (!is) return 1;
    int count = 0;
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("# run id=", 0) == 0) ++count;
    return count + 1;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c = 0) {
    return CounterRng::mix(master ^ CounterRng::mix(a * 0x100000001B3ULL + b * 0x9E3779B9ULL + c));
}

struct Ctx {
    const ExperimentConfig& cfg;
    const RunOptions& opts;
    RunReport& rep;
    std::uint64_t master;
    int threads;
    CsvSink results;
    CsvSink trace;
    std::string hash;
    int run_id;

    void result_row(BoundKind kind, double snr, std::int64_t n_half, std::uint64_t seed,
                    double bits, double se_bits, std::int64_t iters, double wall_ms) {
        std::ostringstream os;
        os.precision(10);
        os << bound_kind_name(kind) << ',' << snr << ',' << n_half << ',' << seed << ',' << bits
           << ',' << se_bits << ',' << iters << ',' << static_cast<std::int64_t>(wall_ms);
        results.row(os.str());
    }

    void trace_rows(const OptTrace& tr, double snr, int run) {
        {
            std::ofstream os(trace.path, std::ios::app);
            os << "# trace snr_db=" << snr << " run=" << run << "\n";
        }
        for (const OptIterRec& r : tr.iters) {
            std::ostringstream os;
            os.precision(10);
            os << r.iter << ',' << r.bound_bits << ',' << r.stderr_bits << ',' << r.gamma << ','
               << static_cast<std::int64_t>(r.wall_ms);
            trace.row(os.str());
        }
    }

    void summary(const std::string& s) { rep.summary_lines.push_back(s); }
    void warn(const std::string& s) { rep.warnings.push_back(s); }
};

PrChannel build_pr(const ExperimentConfig& cfg, double snr_db) {
    double sigma = pr_sigma_for_snr_db(cfg.h, snr_db);
    Quantizer q;
    if (!cfg.quantizer_thresholds.empty()) {
        q = make_quantizer(cfg.quantizer_thresholds);
    } else {
        double unit = cfg.quant_sigma_y_units ? pr_output_std(cfg.h, sigma) : 1.0;
        q = symmetric_quantizer(cfg.quant_step * unit, cfg.quant_max * unit);
    }
    return make_pr_channel(cfg.h, sigma, q);
}

GeChannel build_ge(const ExperimentConfig& cfg) {
    return GeChannel{cfg.p_b, cfg.p_g, cfg.eps_g, cfg.eps_b};
}

WindowGen window_gen(const Ctx& ctx, double snr_db, int snr_idx, int run, int d1, int d2) {
    const ExperimentConfig& cfg = ctx.cfg;
    std::uint64_t base = derive_seed(ctx.master, static_cast<std::uint64_t>(snr_idx) + 1,
                                     static_cast<std::uint64_t>(run) + 1);
    if (cfg.channel == ChannelKind::pr) {
        PrChannel ch = build_pr(cfg, snr_db);
        Source src = iud_source(ch.trellis.input_alphabet);
        return [ch, src, base, n = cfg.n_half, d1, d2](std::uint64_t w) {
            return simulate_pr(ch, src, n, derive_seed(base, 0x77, w), d1, d2);
        };
    }
    if (cfg.channel == ChannelKind::ge) {
        GeChannel ch = build_ge(cfg);
        Source src = iud_source(binary_bits());
        return [ch, src, base, n = cfg.n_half, d1, d2](std::uint64_t w) {
            return simulate_ge(ch, src, n, derive_seed(base, 0x77, w), d1, d2);
        };
    }
    FadingChannel ch = make_fading_channel(cfg.fdt, snr_db, cfg.half_bins);
    Source src = iud_source(binary_bipolar());
    return [ch, src, base, n = cfg.n_half, d1, d2](std::uint64_t w) {
        return simulate_fading(ch, src, n, derive_seed(base, 0x77, w), d1, d2);
    };
}

// conditional-entropy reference for upper/diff objectives: exact for PR,
// the delay-3 lower bound for fading
double h_cond_reference(Ctx& ctx, double snr_db) {
    if (ctx.cfg.channel == ChannelKind::pr)
        return pr_conditional_entropy(build_pr(ctx.cfg, snr_db));
    if (ctx.cfg.channel == ChannelKind::ge)
        throw std::invalid_argument("config: experiment: upper/diff for ge channels needs an "
                                    "exact-entropy path that is not provided");
    FadingChannel ch = make_fading_channel(ctx.cfg.fdt, snr_db, ctx.cfg.half_bins);
    EntropyLbConfig ecfg;
    ecfg.delay = 3;
    ecfg.quad_nodes = ctx.cfg.quad_nodes;
    EntropyLbResult r = fading_entropy_lb(ch, ecfg);
    if (!r.converged)
        ctx.warn("entropy_lb quadrature did not converge at snr " + std::to_string(snr_db) +
                 " (last change " + std::to_string(r.last_change) + " nats)");
    return r.bound.value_nats;
}

FsmcModel initial_forward_params(Ctx& ctx, double snr_db, int snr_idx) {
    const ExperimentConfig& cfg = ctx.cfg;
    if (cfg.channel == ChannelKind::pr) {
        PrChannel ch = build_pr(cfg, snr_db);
        InitMode m = cfg.init_mode == "truncation"    ? InitMode::truncation
                     : cfg.init_mode == "averaging"   ? InitMode::averaging
                                                      : InitMode::diff_optimized;
        return init_pr_aux(ch, cfg.m_hat, m);
    }
    if (cfg.channel == ChannelKind::ge) {
        // auxiliary with the same section as the original
        return ge_exact_model(build_ge(cfg));
    }
    FadingChannel ch = make_fading_channel(cfg.fdt, snr_db, cfg.half_bins);
    FsmcModel nat = init_fading_natural(ch, cfg.k_amp, cfg.k_theta, 10000000,
                                        derive_seed(ctx.master, 0xFAD, snr_idx));
    if (cfg.init_mode == "diff_optimized") {
        OptConfig oc;
        oc.max_iters = cfg.init_diff_iters;
        oc.eval = EvalOptions{cfg.burnin, 10000};
        oc.h_cond_nats = 0.0;  // value offset only; the iteration is unaffected
        oc.threads = ctx.threads;
        WindowGen gen = window_gen(ctx, snr_db, snr_idx, /*run=*/9000, 0, 0);
        return optimize_diff(nat, iud_source(binary_bipolar()), gen, oc).params;
    }
    return nat;
}

void run_rate(Ctx& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    for (int i = 0; i < static_cast<int>(cfg.snr_db.size()); ++i) {
        double snr = cfg.snr_db[static_cast<std::size_t>(i)];
        FsmcModel orig = cfg.channel == ChannelKind::pr ? pr_exact_model(build_pr(cfg, snr))
                                                        : ge_exact_model(build_ge(cfg));
        Source src = iud_source(orig.trellis.input_alphabet);
        std::vector<BoundEstimate> est(static_cast<std::size_t>(cfg.runs));
        parallel_for(cfg.runs, ctx.threads, [&](int r) {
            auto t0 = std::chrono::steady_clock::now();
            SampleWindow w = window_gen(ctx, snr, i, r, 0, 0)(0);
            est[static_cast<std::size_t>(r)] =
                estimate_rate(orig, src, w, EvalOptions{cfg.burnin, 10000});
            (void)t0;
        });
        for (int r = 0; r < cfg.runs; ++r) {
            const BoundEstimate& e = est[static_cast<std::size_t>(r)];
            ctx.result_row(BoundKind::rate, snr, e.n_half, e.seed, e.value_bits(),
                           e.stderr_bits(), 0, 0);
        }
        std::ostringstream os;
        os.precision(6);
        os << "rate snr=" << snr << " dB: " << est[0].value_bits() << " bits/use (+-"
           << est[0].stderr_bits() << ")";
        ctx.summary(os.str());
    }
}

void run_forward_opt(Ctx& ctx, bool diff_objective) {
    const ExperimentConfig& cfg = ctx.cfg;
    for (int i = 0; i < static_cast<int>(cfg.snr_db.size()); ++i) {
        double snr = cfg.snr_db[static_cast<std::size_t>(i)];
        double h_ref = h_cond_reference(ctx, snr);
        FsmcModel init = initial_forward_params(ctx, snr, i);
        for (int r = 0; r < cfg.runs; ++r) {
            OptConfig oc;
            oc.max_iters = cfg.iters;
            oc.fresh_window_each_iter = cfg.fresh_windows;
            oc.eval = EvalOptions{cfg.burnin, 10000};
            oc.h_cond_nats = h_ref;
            oc.threads = ctx.threads;
            Source src = cfg.channel == ChannelKind::ge ? iud_source(binary_bits())
                                                        : iud_source(binary_bipolar());
            WindowGen gen = window_gen(ctx, snr, i, r, 0, 0);
            auto t0 = std::chrono::steady_clock::now();
            OptUpperResult res = diff_objective ? optimize_diff(init, src, gen, oc)
                                                : optimize_upper(init, src, gen, oc);
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
            ctx.trace_rows(res.trace, snr, r);
            const OptIterRec& last = res.trace.iters.back();
            ctx.result_row(diff_objective ? BoundKind::diff : BoundKind::upper, snr, cfg.n_half,
                           gen(0).seed, last.bound_bits, last.stderr_bits,
                           static_cast<std::int64_t>(res.trace.iters.size()) - 1, ms);
            std::ostringstream ck;
            ck << ctx.opts.out_dir << "/params_" << (diff_objective ? "diff" : "upper") << "_snr"
               << snr << "_run" << r << ".txt";
            std::ofstream cf(ck.str());
            save_forward_params(res.params, cf);
            std::ostringstream os;
            os.precision(6);
            os << (diff_objective ? "diff" : "upper") << " snr=" << snr << " dB run=" << r
               << ": " << last.bound_bits << " bits/use after "
               << res.trace.iters.size() - 1 << " iterations";
            ctx.summary(os.str());
        }
    }
}

void run_lower(Ctx& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    for (int i = 0; i < static_cast<int>(cfg.snr_db.size()); ++i) {
        double snr = cfg.snr_db[static_cast<std::size_t>(i)];
        FsmcModel af = initial_forward_params(ctx, snr, i);
        AuxBackwardParams init = backward_from_forward(af, cfg.d1, cfg.d2);

        // closed-form clamped statistics exist for PR-on-PR with d1 = d2 = 0
        std::vector<double> t4c;
        const std::vector<double>* t4p = nullptr;
        if (cfg.channel == ChannelKind::pr && cfg.d1 == 0 && cfg.d2 == 0) {
            t4c = closed_form_t4_pr(build_pr(cfg, snr), cfg.m_hat);
            t4p = &t4c;
        }
        for (int r = 0; r < cfg.runs; ++r) {
            OptConfig oc;
            oc.max_iters = cfg.iters;
            oc.fresh_window_each_iter = cfg.fresh_windows;
            oc.eval = EvalOptions{cfg.burnin, 10000};
            oc.gammas = GammaSchedule{cfg.gamma_set, GammaSchedule::Policy::best_of_set};
            oc.threads = ctx.threads;
            Source src = cfg.channel == ChannelKind::ge ? iud_source(binary_bits())
                                                        : iud_source(binary_bipolar());
            WindowGen gen = window_gen(ctx, snr, i, r, cfg.d1, cfg.d2);
            auto t0 = std::chrono::steady_clock::now();
            OptLowerResult res = optimize_lower(init, src, gen, oc, t4p);
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
            ctx.trace_rows(res.trace, snr, r);
            const OptIterRec& last = res.trace.iters.back();
            ctx.result_row(BoundKind::lower, snr, cfg.n_half, gen(0).seed, last.bound_bits,
                           last.stderr_bits, static_cast<std::int64_t>(res.trace.iters.size()) - 1,
                           ms);
            std::ostringstream ck;
            ck << ctx.opts.out_dir << "/params_lower_snr" << snr << "_run" << r << ".txt";
            std::ofstream cf(ck.str());
            save_backward_params(res.params, cf);
            std::ostringstream os;
            os.precision(6);
            os << "lower snr=" << snr << " dB run=" << r << ": " << last.bound_bits
               << " bits/use";
            ctx.summary(os.str());
        }
    }
}

void run_entropy_lb(Ctx& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    for (double snr : cfg.snr_db) {
        FadingChannel ch = make_fading_channel(cfg.fdt, snr, cfg.half_bins);
        for (double d : cfg.delays) {
            EntropyLbConfig ecfg;
            ecfg.delay = static_cast<int>(d);
            ecfg.quad_nodes = cfg.quad_nodes;
            auto t0 = std::chrono::steady_clock::now();
            EntropyLbResult r = fading_entropy_lb(ch, ecfg);
            double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            if (!r.converged)
                ctx.warn("entropy_lb quadrature did not converge (snr " + std::to_string(snr) +
                         ", delay " + std::to_string(ecfg.delay) + ")");
            ctx.result_row(BoundKind::h_cond, snr, 0, 0, r.bound.value_nats / 0.6931471805599453,
                           0, ecfg.delay, ms);
            std::ostringstream os;
            os.precision(6);
            os << "h_cond lb snr=" << snr << " dB delay=" << ecfg.delay << ": "
               << r.bound.value_nats << " nats/use (" << r.nodes_used << " nodes)";
            ctx.summary(os.str());
        }
    }
}

void run_csi(Ctx& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    for (double snr : cfg.snr_db) {
        FadingChannel ch = make_fading_channel(cfg.fdt, snr, cfg.half_bins);
        auto t0 = std::chrono::steady_clock::now();
        BoundEstimate e = fading_csi_upper(ch, cfg.csi_samples, derive_seed(ctx.master, 0xC5, 0));
        double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        ctx.result_row(BoundKind::csi, snr, cfg.csi_samples, e.seed, e.value_bits(),
                       e.stderr_bits(), 0, ms);
        std::ostringstream os;
        os.precision(6);
        os << "csi snr=" << snr << " dB: " << e.value_bits() << " bits/use (+-"
           << e.stderr_bits() << ")";
        ctx.summary(os.str());
    }
}

void run_soblex(Ctx& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    if (cfg.channel != ChannelKind::pr)
        throw std::invalid_argument("config: experiment: soblex_baseline supports pr channels");
    for (int i = 0; i < static_cast<int>(cfg.snr_db.size()); ++i) {
        double snr = cfg.snr_db[static_cast<std::size_t>(i)];
        PrChannel ch = build_pr(cfg, snr);
        double h_ref = pr_conditional_entropy(ch);
        Source src = iud_source(ch.trellis.input_alphabet);
        SampleWindow w = window_gen(ctx, snr, i, 0, 0, 0)(0);

        FsmcModel shape = init_pr_aux(ch, cfg.m_hat, InitMode::averaging);
        const int bb = shape.trellis.n_branches();
        const int k = shape.n_outputs;
        const int dim = bb * (k - 1);  // stick-breaking chart per output row
        EvalOptions eopts{cfg.burnin, 0};

        auto objective = [&, shape](const std::vector<double>& u) mutable {
            FsmcModel m = shape;
            for (int b = 0; b < bb; ++b) {
                std::vector<double> coords(u.begin() + static_cast<std::ptrdiff_t>(b) * (k - 1),
                                           u.begin() + static_cast<std::ptrdiff_t>(b + 1) * (k - 1));
                std::vector<double> row = stick_breaking(coords, k);
                for (int y = 0; y < k; ++y) m.out_at(b, y) = row[static_cast<std::size_t>(y)];
            }
            m.floor_and_normalize_out();
            return eval_upper(m, src, w, h_ref, eopts).value_bits();
        };

        for (double budget : cfg.soblex_budgets) {
            std::vector<MinimizeResult> results(static_cast<std::size_t>(cfg.runs));
            parallel_for(cfg.runs, ctx.threads, [&](int r) {
                BoxedObjective obj;
                obj.dim = dim;
                obj.lo.assign(static_cast<std::size_t>(dim), 0.0);
                obj.hi.assign(static_cast<std::size_t>(dim), 1.0);
                obj.f = objective;
                obj.call_budget = static_cast<std::int64_t>(budget) * 3 + 4000;
                SoblexConfig sc;
                sc.initial_budget = static_cast<std::int64_t>(budget);
                sc.frac_tol = cfg.soblex_frac_tol;
                sc.seed_offset = static_cast<std::uint64_t>(r) << 20;  // disjoint streams
                results[static_cast<std::size_t>(r)] = soblex(obj, sc);
            });
            double mean = 0.0;
            for (const auto& res : results) mean += res.fmin;
            mean /= cfg.runs;
            for (int r = 0; r < cfg.runs; ++r)
                ctx.result_row(BoundKind::upper, snr, cfg.n_half, w.seed,
                               results[static_cast<std::size_t>(r)].fmin, 0,
                               results[static_cast<std::size_t>(r)].evals, 0);
            std::ostringstream os;
            os.precision(6);
            os << "soblex budget=" << budget << " snr=" << snr << " dB: mean " << mean
               << " bits/use over " << cfg.runs << " runs";
            ctx.summary(os.str());
        }
    }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    RunReport rep;
    std::uint64_t master = opts.seed_override.value_or(cfg.seed);
    int threads = opts.threads > 0 ? opts.threads : default_threads();

    if (opts.dry_run) {
        rep.summary_lines.push_back("dry-run ok: config hash " + config_hash(cfg));
        rep.summary_lines.push_back("snr points: " + std::to_string(cfg.snr_db.size()) +
                                    ", runs: " + std::to_string(cfg.runs) +
                                    ", n_half: " + std::to_string(cfg.n_half) +
                                    ", threads: " + std::to_string(threads));
        return rep;
    }

    fs::create_directories(opts.out_dir);
    Ctx ctx{cfg,
            opts,
            rep,
            master,
            threads,
            {opts.out_dir + "/results.csv"},
            {opts.out_dir + "/trace.csv"},
            config_hash(cfg),
            0};
    ctx.run_id = next_run_id(ctx.results.path);
    ctx.results.open_run("kind,snr_db,n_half,seed,value_bits,stderr_bits,iters,wall_ms", ctx.hash,
                         ctx.run_id);
    ctx.trace.open_run("iter,bound_bits,stderr_bits,gamma,wall_ms", ctx.hash, ctx.run_id);
    rep.results_path = ctx.results.path;
    rep.trace_path = ctx.trace.path;

    switch (cfg.experiment) {
        case ExperimentKind::rate: run_rate(ctx); break;
        case ExperimentKind::upper: run_forward_opt(ctx, false); break;
        case ExperimentKind::diff: run_forward_opt(ctx, true); break;
        case ExperimentKind::lower: run_lower(ctx); break;
        case ExperimentKind::entropy_lb: run_entropy_lb(ctx); break;
        case ExperimentKind::csi: run_csi(ctx); break;
        case ExperimentKind::soblex_baseline: run_soblex(ctx); break;
    }

    if (opts.strict && !rep.warnings.empty()) rep.exit_code = 3;
    return rep;
}

}  // namespace memrate
