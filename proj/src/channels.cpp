#include "memrate/channels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "memrate/rng.hpp"

namespace memrate {

std::string export_window(const SampleWindow& w, const std::string& config_hash) {
    std::ostringstream os;
    os << "# memrate-window seed=" << w.seed << " n_half=" << w.n_half
       << " pad_left=" << w.pad_left << " pad_right=" << w.pad_right
       << " config_hash=" << config_hash << "\n";
    const std::int64_t total = static_cast<std::int64_t>(w.y.size());
    for (std::int64_t t = 0; t < total; ++t) {
        std::int64_t l = t - w.pad_left;
        if (l >= 0 && l < w.length())
            os << w.x[static_cast<std::size_t>(l)];
        else
            os << '*';
        os << ' ' << w.y[static_cast<std::size_t>(t)] << "\n";
    }
    return os.str();
}

// --- partial response --------------------------------------------------------

double PrChannel::branch_level(int branch_id) const {
    const Branch& b = trellis.branches[static_cast<std::size_t>(branch_id)];
    const int a = trellis.n_inputs();
    const int m = memory();
    double level = h[0] * trellis.input_alphabet.value(b.x);
    int state = b.s_prev;
    for (int k = 1; k <= m; ++k) {
        int digit = state % a;  // digit 0 holds the most recent past input
        state /= a;
        level += h[static_cast<std::size_t>(k)] * trellis.input_alphabet.value(digit);
    }
    return level;
}

PrChannel make_pr_channel(std::vector<double> h, double sigma, Quantizer q) {
    if (h.empty()) throw std::invalid_argument("make_pr_channel: empty coefficient list");
    if (sigma <= 0.0) throw std::invalid_argument("make_pr_channel: sigma must be > 0");
    PrChannel ch;
    ch.h = std::move(h);
    ch.sigma = sigma;
    ch.quantizer = std::move(q);
    ch.trellis = build_pr_trellis(static_cast<int>(ch.h.size()) - 1, binary_bipolar());
    return ch;
}

double pr_sigma_for_snr_db(const std::vector<double>& h, double snr_db) {
    double e = 0.0;
    for (double c : h) e += c * c;
    return std::sqrt(e / std::pow(10.0, snr_db / 10.0));
}

double pr_output_std(const std::vector<double>& h, double sigma) {
    double e = 0.0;
    for (double c : h) e += c * c;
    return std::sqrt(e + sigma * sigma);
}

std::vector<double> pr_output_pmf(const PrChannel& ch) {
    const int k = ch.quantizer.n_bins();
    std::vector<double> out(static_cast<std::size_t>(ch.trellis.n_branches()) * k);
    for (int b = 0; b < ch.trellis.n_branches(); ++b) {
        double mu = ch.branch_level(b);
        double s = 0.0;
        double* row = out.data() + static_cast<std::size_t>(b) * k;
        for (int y = 0; y < k; ++y) {
            double p = ch.quantizer.bin_prob(y, mu, ch.sigma);
            row[y] = p < kEpsFloor ? kEpsFloor : p;
            s += row[y];
        }
        for (int y = 0; y < k; ++y) row[y] /= s;
    }
    return out;
}

FsmcModel pr_exact_model(const PrChannel& ch) {
    FsmcModel m;
    m.trellis = ch.trellis;
    m.n_outputs = ch.quantizer.n_bins();
    m.trans = natural_transitions(ch.trellis);
    m.out = pr_output_pmf(ch);
    return m;
}

SampleWindow simulate_pr(const PrChannel& ch, const Source& src, std::int64_t n_half,
                         std::uint64_t seed, int pad_left, int pad_right) {
    const int m = ch.memory();
    const int a = src.alphabet.size();
    const std::int64_t total = pad_left + 2 * n_half + pad_right;
    CounterRng rng(seed, 0);

    SampleWindow w;
    w.n_half = n_half;
    w.seed = seed;
    w.pad_left = pad_left;
    w.pad_right = pad_right;
    w.x.resize(static_cast<std::size_t>(2 * n_half));
    w.y.resize(static_cast<std::size_t>(total));

    // warm the filter memory so the first emitted output is stationary
    std::vector<double> hist(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i)
        hist[static_cast<std::size_t>(i)] = src.alphabet.value(rng.next_index(src.q.data(), a));

    for (std::int64_t t = 0; t < total; ++t) {
        int xi = rng.next_index(src.q.data(), a);
        double xv = src.alphabet.value(xi);
        double acc = ch.h[0] * xv;
        for (int k = 1; k <= m; ++k) acc += ch.h[static_cast<std::size_t>(k)] * hist[static_cast<std::size_t>(k - 1)];
        if (m > 0) {
            for (int k = m - 1; k > 0; --k) hist[static_cast<std::size_t>(k)] = hist[static_cast<std::size_t>(k - 1)];
            hist[0] = xv;
        }
        double noisy = acc + ch.sigma * rng.next_gauss();
        w.y[static_cast<std::size_t>(t)] = ch.quantizer.quantize(noisy);
        std::int64_t l = t - pad_left;
        if (l >= 0 && l < 2 * n_half) w.x[static_cast<std::size_t>(l)] = xi;
    }
    return w;
}

double pr_conditional_entropy(const PrChannel& ch) {
    std::vector<double> pmf = pr_output_pmf(ch);
    const int k = ch.quantizer.n_bins();
    const int nb = ch.trellis.n_branches();
    double hsum = 0.0;
    for (int b = 0; b < nb; ++b) {
        const double* row = pmf.data() + static_cast<std::size_t>(b) * k;
        double hb = 0.0;
        for (int y = 0; y < k; ++y)
            if (row[y] > 0.0) hb -= row[y] * std::log(row[y]);
        hsum += hb;
    }
    return hsum / nb;  // branches are uniformly occupied
}

// --- Gilbert-Elliott ----------------------------------------------------------

FsmcModel ge_exact_model(const GeChannel& ch) {
    FsmcModel m;
    m.trellis = build_ge_trellis();
    m.n_outputs = 2;
    m.trans.resize(static_cast<std::size_t>(m.trellis.n_branches()));
    m.out.resize(static_cast<std::size_t>(m.trellis.n_branches()) * 2);
    for (const Branch& b : m.trellis.branches) {
        double stay_good = 1.0 - ch.p_b;
        double t;
        if (b.s_prev == 0)
            t = (b.s_next == 0) ? stay_good : ch.p_b;
        else
            t = (b.s_next == 1) ? 1.0 - ch.p_g : ch.p_g;
        m.trans[static_cast<std::size_t>(b.id)] = t;
        double eps = (b.s_prev == 0) ? ch.eps_g : ch.eps_b;
        for (int y = 0; y < 2; ++y) {
            double p = (y == b.x) ? 1.0 - eps : eps;
            m.out_at(b.id, y) = p;
        }
    }
    m.floor_and_normalize_out();
    return m;
}

SampleWindow simulate_ge(const GeChannel& ch, const Source& src, std::int64_t n_half,
                         std::uint64_t seed, int pad_left, int pad_right) {
    const std::int64_t total = pad_left + 2 * n_half + pad_right;
    CounterRng rng(seed, 0);

    SampleWindow w;
    w.n_half = n_half;
    w.seed = seed;
    w.pad_left = pad_left;
    w.pad_right = pad_right;
    w.x.resize(static_cast<std::size_t>(2 * n_half));
    w.y.resize(static_cast<std::size_t>(total));

    // stationary start: P(good) = p_g / (p_g + p_b)
    double pg_stat = (ch.p_g + ch.p_b > 0.0) ? ch.p_g / (ch.p_g + ch.p_b) : 1.0;
    int state = (rng.next_unit() < pg_stat) ? 0 : 1;

    for (std::int64_t t = 0; t < total; ++t) {
        int xi = rng.next_index(src.q.data(), src.alphabet.size());
        double eps = (state == 0) ? ch.eps_g : ch.eps_b;
        int flip = rng.next_unit() < eps ? 1 : 0;
        w.y[static_cast<std::size_t>(t)] = xi ^ flip;
        std::int64_t l = t - pad_left;
        if (l >= 0 && l < 2 * n_half) w.x[static_cast<std::size_t>(l)] = xi;
        double pswitch = (state == 0) ? ch.p_b : ch.p_g;
        if (rng.next_unit() < pswitch) state ^= 1;
    }
    return w;
}

// --- fading -------------------------------------------------------------------

double FadingChannel::noise_sigma_dim() const { return std::sqrt(n0 / 2.0); }

double FadingChannel::output_std_dim() const { return std::sqrt(sigma_g2 * es + n0 / 2.0); }

namespace {
double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }
}  // namespace

FadingChannel make_fading_channel(double fdt, double snr_db, int half_bins) {
    FadingChannel ch;
    ch.alpha = bessel_j0(2.0 * 3.14159265358979323846 * fdt);
    ch.es = 1.0;
    ch.n0 = ch.es / std::pow(10.0, snr_db / 10.0);
    ch.sigma_g2 = 0.5;
    double sy = ch.output_std_dim();
    ch.quantizer_dim = symmetric_quantizer(0.5 * sy, half_bins * 0.5 * sy);
    return ch;
}

std::vector<std::complex<double>> simulate_fading_gain(const FadingChannel& ch, std::int64_t n,
                                                       std::uint64_t seed) {
    if (!(std::abs(ch.alpha) < 1.0))
        throw std::invalid_argument("simulate_fading_gain: |alpha| must be < 1");
    CounterRng rng(seed, 1);
    const double sg = std::sqrt(ch.sigma_g2);
    const double sw = std::sqrt(ch.sigma_g2 * (1.0 - ch.alpha * ch.alpha));
    std::vector<std::complex<double>> g(static_cast<std::size_t>(n));
    std::complex<double> cur(sg * rng.next_gauss(), sg * rng.next_gauss());
    for (std::int64_t t = 0; t < n; ++t) {
        g[static_cast<std::size_t>(t)] = cur;
        cur = ch.alpha * cur + std::complex<double>(sw * rng.next_gauss(), sw * rng.next_gauss());
    }
    return g;
}

SampleWindow simulate_fading(const FadingChannel& ch, const Source& src, std::int64_t n_half,
                             std::uint64_t seed, int pad_left, int pad_right) {
    if (!(std::abs(ch.alpha) < 1.0))
        throw std::invalid_argument("simulate_fading: |alpha| must be < 1");
    const std::int64_t total = pad_left + 2 * n_half + pad_right;
    CounterRng rng(seed, 0);
    const double sg = std::sqrt(ch.sigma_g2);
    const double sw = std::sqrt(ch.sigma_g2 * (1.0 - ch.alpha * ch.alpha));
    const double sn = ch.noise_sigma_dim();
    const double amp = std::sqrt(ch.es);
    const int kdim = ch.quantizer_dim.n_bins();

    SampleWindow w;
    w.n_half = n_half;
    w.seed = seed;
    w.pad_left = pad_left;
    w.pad_right = pad_right;
    w.x.resize(static_cast<std::size_t>(2 * n_half));
    w.y.resize(static_cast<std::size_t>(total));

    double gre = sg * rng.next_gauss();
    double gim = sg * rng.next_gauss();
    for (std::int64_t t = 0; t < total; ++t) {
        int xi = rng.next_index(src.q.data(), src.alphabet.size());
        double xv = src.alphabet.value(xi);
        double re = gre * xv * amp + sn * rng.next_gauss();
        double im = gim * xv * amp + sn * rng.next_gauss();
        int ybin = ch.quantizer_dim.quantize(re) * kdim + ch.quantizer_dim.quantize(im);
        w.y[static_cast<std::size_t>(t)] = ybin;
        std::int64_t l = t - pad_left;
        if (l >= 0 && l < 2 * n_half) w.x[static_cast<std::size_t>(l)] = xi;
        gre = ch.alpha * gre + sw * rng.next_gauss();
        gim = ch.alpha * gim + sw * rng.next_gauss();
    }
    return w;
}

}  // namespace memrate
