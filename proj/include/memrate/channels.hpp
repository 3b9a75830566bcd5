#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "memrate/fsmc.hpp"
#include "memrate/quantizer.hpp"
#include "memrate/trellis.hpp"

namespace memrate {

// One seeded realization of a channel: inputs x (length 2N, symbol indices)
// and outputs y (length pad_left + 2N + pad_right, output indices). The pads
// hold extra outputs so backward-model contexts can read past the window edge.
struct SampleWindow {
    std::vector<std::int32_t> x;
    std::vector<std::int32_t> y;
    int pad_left = 0;
    int pad_right = 0;
    std::int64_t n_half = 0;
    std::uint64_t seed = 0;

    std::int64_t length() const { return 2 * n_half; }
    std::int32_t y_at(std::int64_t l) const { return y[static_cast<std::size_t>(pad_left + l)]; }
};

// Text export: header lines then one "x y" pair per line (pad outputs get x = *).
std::string export_window(const SampleWindow& w, const std::string& config_hash);

// --- quantized partial response channel -----------------------------------

struct PrChannel {
    std::vector<double> h;   // h_0..h_M
    double sigma = 1.0;      // AWGN std dev
    Quantizer quantizer;
    TrellisSection trellis;  // PR trellis of memory h.size()-1

    int memory() const { return static_cast<int>(h.size()) - 1; }
    // noiseless filter level for a branch of the PR trellis
    double branch_level(int branch_id) const;
};

PrChannel make_pr_channel(std::vector<double> h, double sigma, Quantizer q);

// sigma for "SNR = 10 log10(|h|^2 E[X^2] / sigma^2)" with E[X^2] = 1
double pr_sigma_for_snr_db(const std::vector<double>& h, double snr_db);
// output standard deviation of the unquantized PR channel (i.u.d. inputs)
double pr_output_std(const std::vector<double>& h, double sigma);

// Exact W(y|b) rows from the Gaussian CDF. Rows are floored and renormalized.
FsmcModel pr_exact_model(const PrChannel& ch);
std::vector<double> pr_output_pmf(const PrChannel& ch);  // [branch * K + y]

SampleWindow simulate_pr(const PrChannel& ch, const Source& src, std::int64_t n_half,
                         std::uint64_t seed, int pad_left = 0, int pad_right = 0);

// Exact H(Y|X) in nats per use: branches of the controllable PR trellis are
// uniformly occupied under an i.u.d. source.
double pr_conditional_entropy(const PrChannel& ch);

// --- Gilbert-Elliott channel ------------------------------------------------

struct GeChannel {
    double p_b = 0.0;    // P(good -> bad)
    double p_g = 0.0;    // P(bad -> good)
    double eps_g = 0.0;  // crossover in the good state
    double eps_b = 0.0;  // crossover in the bad state
};

FsmcModel ge_exact_model(const GeChannel& ch);
SampleWindow simulate_ge(const GeChannel& ch, const Source& src, std::int64_t n_half,
                         std::uint64_t seed, int pad_left = 0, int pad_right = 0);

// --- quantized Gauss-Markov flat fading -------------------------------------

struct FadingChannel {
    double alpha = 0.0;     // gain correlation, |alpha| < 1
    double es = 1.0;        // symbol energy
    double n0 = 1.0;        // noise spectral density (variance N0/2 per dimension)
    double sigma_g2 = 0.5;  // fading power per complex dimension
    Quantizer quantizer_dim;

    int n_outputs() const {
        int k = quantizer_dim.n_bins();
        return k * k;
    }
    double noise_sigma_dim() const;  // sqrt(N0/2)
    double output_std_dim() const;   // sqrt(sigma_g2*Es + N0/2)
};

// 10-bins-per-dimension quantizer with thresholds at multiples of 0.5*sigma_y
FadingChannel make_fading_channel(double fdt, double snr_db, int half_bins = 4);

// product output index: re_bin * K + im_bin
SampleWindow simulate_fading(const FadingChannel& ch, const Source& src, std::int64_t n_half,
                             std::uint64_t seed, int pad_left = 0, int pad_right = 0);

// gain samples for estimation/diagnostics (same recursion as the simulator)
std::vector<std::complex<double>> simulate_fading_gain(const FadingChannel& ch, std::int64_t n,
                                                       std::uint64_t seed);

}  // namespace memrate
