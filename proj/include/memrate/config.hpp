#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memrate {

// Flat key=value configuration with dotted section names, e.g.
//   experiment = upper
//   channel.kind = pr
//   aux.m_hat = 1
struct KvConfig {
    std::map<std::string, std::string> kv;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt = "") const;
    double get_num(const std::string& k, double dflt) const;
    std::int64_t get_int(const std::string& k, std::int64_t dflt) const;
    std::vector<double> get_list(const std::string& k) const;  // comma separated
};

KvConfig parse_kv(const std::string& text);

enum class ExperimentKind { rate, upper, diff, lower, entropy_lb, csi, soblex_baseline };
enum class ChannelKind { pr, ge, fading };

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::rate;
    ChannelKind channel = ChannelKind::pr;

    // pr
    std::vector<double> h;
    std::vector<double> quantizer_thresholds;  // explicit thresholds, or
    double quant_step = 0.0, quant_max = 0.0;  // symmetric grid
    bool quant_sigma_y_units = false;          // grid expressed in output-std units
    // ge
    double p_b = 0.0, p_g = 0.0, eps_g = 0.0, eps_b = 0.0;
    // fading
    double fdt = 0.1;
    int half_bins = 4;

    std::vector<double> snr_db{0.0};

    // auxiliary model
    int m_hat = 1;
    int k_amp = 2, k_theta = 8;
    int d1 = 0, d2 = 0;
    std::string init_mode = "diff_optimized";
    int init_diff_iters = 50;  // fading diff-optimized initialization budget

    std::int64_t n_half = 100000;
    int iters = 50;
    std::vector<double> gamma_set{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    bool fresh_windows = false;
    std::int64_t burnin = 1000;
    int runs = 1;
    std::uint64_t seed = 1;

    // entropy_lb
    std::vector<double> delays{1, 2, 3};
    int quad_nodes = 32;
    // csi
    std::int64_t csi_samples = 200000;
    // soblex
    std::vector<double> soblex_budgets{1000};
    double soblex_frac_tol = 1e-5;

    std::string raw_text;  // canonical text for hashing/reproducibility
};

// Parses and validates; error messages name the offending field.
ExperimentConfig parse_experiment_config(const std::string& text);

// 64-bit FNV-1a of the canonicalized config text, hex encoded
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::string> list_recipes();
std::optional<std::string> recipe_text(const std::string& name);

}  // namespace memrate
