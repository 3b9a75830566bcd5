#include "memrate/fading_bounds.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "memrate/rng.hpp"

namespace memrate {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869;

// all K bin probabilities of Normal(mean, sigma^2) in one threshold sweep
void bin_probs(const Quantizer& q, double mean, double sigma, double* p) {
    const int k = q.n_bins();
    double prev = 0.0;
    for (int i = 0; i < k - 1; ++i) {
        double z = (q.thresholds[static_cast<std::size_t>(i)] - mean) / sigma;
        double c = 0.5 * std::erfc(-z * 0.7071067811865475244);
        p[i] = c - prev;
        prev = c;
    }
    p[k - 1] = 1.0 - prev;
}

double entropy_of(const double* p, std::int64_t n) {
    double h = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h;
}

// Joint pmf of the next `depth` outputs of the per-dimension gain chain,
// conditioned on the gain `u` one step back and the input signs xs[0..depth).
// Nested Gauss-Hermite over the missing gains, recentered at each step.
struct NestedQuad {
    const FadingChannel* ch;
    int k;
    double amp;       // sqrt(Es)
    double sn;        // noise sigma per dimension
    double step_c;    // sqrt(2) * process-noise sigma per dimension
    std::vector<double> z, wt;  // GH nodes, weights/sqrt(pi)
    const int* xs;
    std::vector<std::vector<double>> buf;  // per-level output tensors
    std::vector<double> pbuf;

    void joint(int level, int depth, double u, double* out) {
        const std::int64_t tail = static_cast<std::int64_t>(buf[static_cast<std::size_t>(level)].size()) / k;
        std::fill(out, out + k * tail, 0.0);
        double* p = pbuf.data();
        for (std::size_t i = 0; i < z.size(); ++i) {
            double u2 = ch->alpha * u + step_c * z[i];
            bin_probs(ch->quantizer_dim, xs[level] * amp * u2, sn, p);
            if (level + 1 == depth) {
                for (int y = 0; y < k; ++y) out[y] += wt[i] * p[y];
            } else {
                double* child = buf[static_cast<std::size_t>(level) + 1].data();
                joint(level + 1, depth, u2, child);
                for (int y = 0; y < k; ++y) {
                    double f = wt[i] * p[y];
                    double* dst = out + static_cast<std::int64_t>(y) * tail;
                    for (std::int64_t r = 0; r < tail; ++r) dst[r] += f * child[r];
                }
            }
        }
    }
};

// E over (x, u0) of H(Y_1^depth | x, u0) per real dimension
double mean_joint_entropy(const FadingChannel& ch, int depth, int nodes) {
    std::vector<double> z, w;
    gauss_hermite(nodes, z, w);

    NestedQuad q;
    q.ch = &ch;
    q.k = ch.quantizer_dim.n_bins();
    q.amp = std::sqrt(ch.es);
    q.sn = ch.noise_sigma_dim();
    q.step_c = std::sqrt(2.0 * ch.sigma_g2 * (1.0 - ch.alpha * ch.alpha));
    q.z = z;
    q.wt.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) q.wt[i] = w[i] * kInvSqrtPi;
    q.pbuf.resize(static_cast<std::size_t>(q.k));
    q.buf.resize(static_cast<std::size_t>(depth));
    std::int64_t sz = 1;
    for (int l = depth - 1; l >= 0; --l) {
        sz *= q.k;
        q.buf[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(sz));
    }

    const double u0_c = std::sqrt(2.0 * ch.sigma_g2);
    std::vector<int> xs(static_cast<std::size_t>(depth), 1);
    q.xs = xs.data();

    // x -> -x and u0 -> -u0 both mirror every output index, leaving the
    // entropy unchanged; fix x_1 = +1 and fold the u0 quadrature.
    double total = 0.0;
    const int ncombo = depth > 1 ? (1 << (depth - 1)) : 1;
    for (int combo = 0; combo < ncombo; ++combo) {
        for (int d = 1; d < depth; ++d) xs[static_cast<std::size_t>(d)] = (combo >> (d - 1)) & 1 ? -1 : 1;
        double acc = 0.0;
        double wsum = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (z[i] < 0.0) continue;
            double fold = (z[i] > 0.0) ? 2.0 : 1.0;
            q.joint(0, depth, u0_c * z[i], q.buf[0].data());
            acc += fold * w[i] * kInvSqrtPi *
                   entropy_of(q.buf[0].data(), static_cast<std::int64_t>(q.buf[0].size()));
            wsum += fold * w[i] * kInvSqrtPi;
        }
        total += acc / wsum;
    }
    return total / ncombo;
}

double entropy_lb_once(const FadingChannel& ch, int delay, int nodes) {
    double hd = mean_joint_entropy(ch, delay, nodes);
    double hprev = delay > 1 ? mean_joint_entropy(ch, delay - 1, nodes) : 0.0;
    return 2.0 * (hd - hprev);  // both real dimensions
}

}  // namespace

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    const double eps = 3e-14;
    const int m = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * nodes[1];
        else
            z = 2.0 * z - nodes[static_cast<std::size_t>(i) - 2];
        for (int it = 0; it < 100; ++it) {
            double p1 = 0.7511255444649424828587;  // pi^(-1/4)
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= eps) break;
        }
        nodes[static_cast<std::size_t>(i)] = z;
        nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
        weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        weights[static_cast<std::size_t>(n - 1 - i)] = weights[static_cast<std::size_t>(i)];
    }
}

EntropyLbResult fading_entropy_lb(const FadingChannel& ch, const EntropyLbConfig& cfg) {
    if (cfg.delay < 1 || cfg.delay > 3)
        throw std::invalid_argument("fading_entropy_lb: delay must be in 1..3");
    if (cfg.quad_nodes < 8) throw std::invalid_argument("fading_entropy_lb: need >= 8 nodes");

    EntropyLbResult res;
    int nodes = cfg.quad_nodes;
    double prev = entropy_lb_once(ch, cfg.delay, nodes);
    double cur = prev;
    res.converged = false;
    for (int r = 0; r < cfg.max_refine; ++r) {
        nodes *= 2;
        cur = entropy_lb_once(ch, cfg.delay, nodes);
        res.last_change = std::abs(cur - prev);
        if (res.last_change < cfg.refine_tol_nats) {
            res.converged = true;
            break;
        }
        prev = cur;
    }
    res.nodes_used = nodes;
    res.bound.kind = BoundKind::h_cond;
    res.bound.value_nats = cur;
    return res;
}

double fading_entropy_memoryless(const FadingChannel& ch, int quad_nodes) {
    std::vector<double> z, w;
    gauss_hermite(quad_nodes, z, w);
    const int k = ch.quantizer_dim.n_bins();
    const double amp = std::sqrt(ch.es);
    const double sn = ch.noise_sigma_dim();
    const double c = std::sqrt(2.0 * ch.sigma_g2);
    std::vector<double> p(static_cast<std::size_t>(k)), acc(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        bin_probs(ch.quantizer_dim, amp * c * z[i], sn, p.data());
        for (int y = 0; y < k; ++y) acc[static_cast<std::size_t>(y)] += w[i] * kInvSqrtPi * p[static_cast<std::size_t>(y)];
    }
    return 2.0 * entropy_of(acc.data(), k);
}

BoundEstimate fading_csi_upper(const FadingChannel& ch, std::int64_t n_samples,
                               std::uint64_t seed) {
    const int k = ch.quantizer_dim.n_bins();
    const double amp = std::sqrt(ch.es);
    const double sn = ch.noise_sigma_dim();
    const double sg = std::sqrt(ch.sigma_g2);
    CounterRng rng(seed, 2);

    std::vector<double> pre(static_cast<std::size_t>(k)), pim(static_cast<std::size_t>(k));
    std::vector<double> mix(static_cast<std::size_t>(k) * k);
    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        double gre = sg * rng.next_gauss();
        double gim = sg * rng.next_gauss();
        // x = +1 channel; x = -1 mirrors both dimensions, same conditional entropy
        bin_probs(ch.quantizer_dim, amp * gre, sn, pre.data());
        bin_probs(ch.quantizer_dim, amp * gim, sn, pim.data());
        double h_cond = 0.0;
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
                double pab = pre[static_cast<std::size_t>(a)] * pim[static_cast<std::size_t>(b)];
                // output under x=-1 lands in the mirrored cell
                double pmirror = pre[static_cast<std::size_t>(k - 1 - a)] *
                                 pim[static_cast<std::size_t>(k - 1 - b)];
                mix[static_cast<std::size_t>(a) * k + b] = 0.5 * (pab + pmirror);
                if (pab > 0.0) h_cond -= pab * std::log(pab);
            }
        }
        double h_out = entropy_of(mix.data(), static_cast<std::int64_t>(k) * k);
        double mi = h_out - h_cond;
        sum += mi;
        sum2 += mi * mi;
    }
    double mean = sum / static_cast<double>(n_samples);
    double var = sum2 / static_cast<double>(n_samples) - mean * mean;
    BoundEstimate e;
    e.kind = BoundKind::csi;
    e.value_nats = mean;
    e.stderr_nats = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_samples));
    e.seed = seed;
    return e;
}

}  // namespace memrate
