#include "memrate/config.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace memrate {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + ": " + why);
}

}  // namespace

std::string KvConfig::get(const std::string& k, const std::string& dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
}

double KvConfig::get_num(const std::string& k, double dflt) const {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        fail(k, "not a number: '" + it->second + "'");
    }
}

std::int64_t KvConfig::get_int(const std::string& k, std::int64_t dflt) const {
    double v = get_num(k, static_cast<double>(dflt));
    auto r = static_cast<std::int64_t>(v);
    if (static_cast<double>(r) != v) fail(k, "not an integer");
    return r;
}

std::vector<double> KvConfig::get_list(const std::string& k) const {
    std::vector<double> out;
    auto it = kv.find(k);
    if (it == kv.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            fail(k, "bad list element '" + tok + "'");
        }
    }
    return out;
}

KvConfig parse_kv(const std::string& text) {
    KvConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                                     ": empty key");
        cfg.kv[key] = val;
    }
    return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    KvConfig kv = parse_kv(text);
    ExperimentConfig c;
    c.raw_text = text;

    std::string exp = kv.get("experiment");
    if (exp == "rate") c.experiment = ExperimentKind::rate;
    else if (exp == "upper") c.experiment = ExperimentKind::upper;
    else if (exp == "diff") c.experiment = ExperimentKind::diff;
    else if (exp == "lower") c.experiment = ExperimentKind::lower;
    else if (exp == "entropy_lb") c.experiment = ExperimentKind::entropy_lb;
    else if (exp == "csi") c.experiment = ExperimentKind::csi;
    else if (exp == "soblex_baseline") c.experiment = ExperimentKind::soblex_baseline;
    else fail("experiment", "must be one of rate|upper|diff|lower|entropy_lb|csi|soblex_baseline, got '" + exp + "'");

    std::string ck = kv.get("channel.kind");
    if (ck == "pr") c.channel = ChannelKind::pr;
    else if (ck == "ge") c.channel = ChannelKind::ge;
    else if (ck == "fading") c.channel = ChannelKind::fading;
    else fail("channel.kind", "must be pr|ge|fading, got '" + ck + "'");

    if (c.channel == ChannelKind::pr) {
        c.h = kv.get_list("channel.h");
        if (c.h.empty()) fail("channel.h", "required for pr channels");
        c.quantizer_thresholds = kv.get_list("channel.quantizer.thresholds");
        c.quant_step = kv.get_num("channel.quantizer.step", 0.0);
        c.quant_max = kv.get_num("channel.quantizer.max", 0.0);
        std::string unit = kv.get("channel.quantizer.unit", "abs");
        if (unit == "abs") c.quant_sigma_y_units = false;
        else if (unit == "sigma_y") c.quant_sigma_y_units = true;
        else fail("channel.quantizer.unit", "must be abs|sigma_y");
        if (c.quantizer_thresholds.empty() && !(c.quant_step > 0.0 && c.quant_max > 0.0))
            fail("channel.quantizer", "give thresholds or a step/max grid");
        for (std::size_t i = 1; i < c.quantizer_thresholds.size(); ++i)
            if (c.quantizer_thresholds[i - 1] >= c.quantizer_thresholds[i])
                fail("channel.quantizer.thresholds", "must be strictly increasing");
    } else if (c.channel == ChannelKind::ge) {
        c.p_b = kv.get_num("channel.p_b", -1);
        c.p_g = kv.get_num("channel.p_g", -1);
        c.eps_g = kv.get_num("channel.eps_g", -1);
        c.eps_b = kv.get_num("channel.eps_b", -1);
        for (auto [name, v] : {std::pair<const char*, double>{"channel.p_b", c.p_b},
                               {"channel.p_g", c.p_g},
                               {"channel.eps_g", c.eps_g},
                               {"channel.eps_b", c.eps_b}})
            if (v < 0.0 || v > 1.0) fail(name, "required, in [0,1]");
    } else {
        c.fdt = kv.get_num("channel.fdt", 0.1);
        c.half_bins = static_cast<int>(kv.get_int("channel.half_bins", 4));
        if (c.half_bins < 1) fail("channel.half_bins", "must be >= 1");
    }

    c.snr_db = kv.get_list("snr.list");
    if (c.snr_db.empty()) c.snr_db = {kv.get_num("snr.db", 0.0)};

    c.m_hat = static_cast<int>(kv.get_int("aux.m_hat", 1));
    if (c.m_hat < 0) fail("aux.m_hat", "must be >= 0");
    c.k_amp = static_cast<int>(kv.get_int("aux.k_amp", 2));
    c.k_theta = static_cast<int>(kv.get_int("aux.k_theta", 8));
    if (c.k_amp < 1 || c.k_theta < 1) fail("aux.k_amp/aux.k_theta", "must be >= 1");
    c.d1 = static_cast<int>(kv.get_int("aux.d1", 0));
    c.d2 = static_cast<int>(kv.get_int("aux.d2", 0));
    if (c.d1 < 0 || c.d2 < 0) fail("aux.d1/aux.d2", "must be >= 0");

    c.init_mode = kv.get("init.mode", c.channel == ChannelKind::fading ? "natural_fading"
                                                                       : "diff_optimized");
    if (c.init_mode != "truncation" && c.init_mode != "averaging" &&
        c.init_mode != "diff_optimized" && c.init_mode != "natural_fading")
        fail("init.mode", "must be truncation|averaging|diff_optimized|natural_fading");
    if (c.channel != ChannelKind::fading && c.init_mode == "natural_fading")
        fail("init.mode", "natural_fading applies to fading channels only");
    c.init_diff_iters = static_cast<int>(kv.get_int("init.diff_iters", 50));

    c.n_half = kv.get_int("run.n_half", 100000);
    if (c.n_half < 1) fail("run.n_half", "must be >= 1");
    c.iters = static_cast<int>(kv.get_int("run.iters", 50));
    if (c.iters < 0) fail("run.iters", "must be >= 0");
    if (kv.has("run.gamma_set")) c.gamma_set = kv.get_list("run.gamma_set");
    for (double g : c.gamma_set)
        if (!(g > 0.0)) fail("run.gamma_set", "gammas must be > 0");
    std::string wp = kv.get("run.window_policy", "fixed");
    if (wp == "fixed") c.fresh_windows = false;
    else if (wp == "fresh") c.fresh_windows = true;
    else fail("run.window_policy", "must be fixed|fresh");
    c.burnin = kv.get_int("run.burnin", 1000);
    if (c.burnin < 0) fail("run.burnin", "must be >= 0");
    c.runs = static_cast<int>(kv.get_int("run.runs", 1));
    if (c.runs < 1) fail("run.runs", "must be >= 1");
    c.seed = static_cast<std::uint64_t>(kv.get_int("run.seed", 1));

    c.delays = kv.get_list("entropy_lb.delays");
    if (c.delays.empty()) c.delays = {1, 2, 3};
    for (double d : c.delays)
        if (d < 1 || d > 3) fail("entropy_lb.delays", "delays must be in 1..3");
    c.quad_nodes = static_cast<int>(kv.get_int("entropy_lb.quad_nodes", 32));
    if (c.quad_nodes < 8) fail("entropy_lb.quad_nodes", "must be >= 8");
    c.csi_samples = kv.get_int("csi.samples", 200000);
    if (c.csi_samples < 1) fail("csi.samples", "must be >= 1");
    if (kv.has("soblex.budgets")) c.soblex_budgets = kv.get_list("soblex.budgets");
    for (double b : c.soblex_budgets)
        if (b < 2) fail("soblex.budgets", "budgets must be >= dim+1");
    c.soblex_frac_tol = kv.get_num("soblex.frac_tol", 1e-5);
    if (!(c.soblex_frac_tol > 0)) fail("soblex.frac_tol", "must be > 0");

    // cross-field checks
    if (c.experiment == ExperimentKind::entropy_lb || c.experiment == ExperimentKind::csi) {
        if (c.channel != ChannelKind::fading)
            fail("experiment", "entropy_lb/csi need channel.kind=fading");
    }
    if (c.experiment == ExperimentKind::rate && c.channel == ChannelKind::fading)
        fail("experiment", "rate needs a finite-state original channel (pr or ge)");
    return c;
}

std::string config_hash(const ExperimentConfig& cfg) {
    // FNV-1a over the canonical key=value lines
    KvConfig kv = parse_kv(cfg.raw_text);
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : kv.kv) {
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

const std::pair<const char*, const char*> kRecipes[] = {
    {"ch3_upper",
     "# memory-2 partial response, 8-level output, EM upper-bound run\n"
     "experiment = upper\n"
     "channel.kind = pr\n"
     "channel.h = 0.5774, -0.5774, -0.5774\n"
     "channel.quantizer.thresholds = -2.25, -1.5, -0.75, 0, 0.75, 1.5, 2.25\n"
     "snr.list = 0\n"
     "aux.m_hat = 1\n"
     "init.mode = diff_optimized\n"
     "run.n_half = 250000\n"
     "run.iters = 300\n"
     "run.window_policy = fixed\n"
     "run.seed = 11\n"},
    {"ch3_lower",
     "# memory-2 partial response, backward-model lower-bound run\n"
     "experiment = lower\n"
     "channel.kind = pr\n"
     "channel.h = 0.5774, -0.5774, -0.5774\n"
     "channel.quantizer.thresholds = -2.25, -1.5, -0.75, 0, 0.75, 1.5, 2.25\n"
     "snr.list = 0\n"
     "aux.m_hat = 1\n"
     "aux.d1 = 0\n"
     "aux.d2 = 0\n"
     "init.mode = diff_optimized\n"
     "run.n_half = 250000\n"
     "run.iters = 50\n"
     "run.gamma_set = 1,2,3,4,5,6,7,8,9,10\n"
     "run.seed = 21\n"},
    {"ch3_rate",
     "experiment = rate\n"
     "channel.kind = pr\n"
     "channel.h = 0.5774, -0.5774, -0.5774\n"
     "channel.quantizer.thresholds = -2.25, -1.5, -0.75, 0, 0.75, 1.5, 2.25\n"
     "snr.list = -4, 0, 4\n"
     "run.n_half = 250000\n"
     "run.seed = 31\n"},
    {"epr4_upper",
     "experiment = upper\n"
     "channel.kind = pr\n"
     "channel.h = 0.5, 0.5, -0.5, -0.5\n"
     "channel.quantizer.thresholds = -2.5, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5\n"
     "snr.list = 0\n"
     "aux.m_hat = 2\n"
     "init.mode = diff_optimized\n"
     "run.n_half = 250000\n"
     "run.iters = 100\n"
     "run.seed = 41\n"},
    {"epr4_lower",
     "experiment = lower\n"
     "channel.kind = pr\n"
     "channel.h = 0.5, 0.5, -0.5, -0.5\n"
     "channel.quantizer.thresholds = -2.5, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5\n"
     "snr.list = 0\n"
     "aux.m_hat = 2\n"
     "init.mode = diff_optimized\n"
     "run.n_half = 250000\n"
     "run.iters = 50\n"
     "run.gamma_set = 1,1.5,2,2.5,3,3.5,4,4.5,5,5.5,6,6.5,7,7.5,8,8.5,9,9.5,10,100\n"
     "run.seed = 51\n"},
    {"eleven_tap_bounds",
     "# memory-10 channel, taps h_i = 1/(1+(i-5)^2), closed-form initialized bounds\n"
     "experiment = diff\n"
     "channel.kind = pr\n"
     "channel.h = 0.03846154, 0.05882353, 0.1, 0.2, 0.5, 1.0, 0.5, 0.2, 0.1, 0.05882353, "
     "0.03846154\n"
     "channel.quantizer.step = 0.05\n"
     "channel.quantizer.max = 2.5\n"
     "channel.quantizer.unit = sigma_y\n"
     "snr.list = 0\n"
     "aux.m_hat = 6\n"
     "init.mode = diff_optimized\n"
     "run.n_half = 50000\n"
     "run.iters = 2\n"
     "run.seed = 61\n"},
    {"ge_rate",
     "experiment = rate\n"
     "channel.kind = ge\n"
     "channel.p_b = 0.03\n"
     "channel.p_g = 0.1\n"
     "channel.eps_g = 0.01\n"
     "channel.eps_b = 0.2\n"
     "run.n_half = 250000\n"
     "run.seed = 71\n"},
    {"fading_diff_0db",
     "experiment = diff\n"
     "channel.kind = fading\n"
     "channel.fdt = 0.1\n"
     "snr.list = 0\n"
     "aux.k_amp = 2\n"
     "aux.k_theta = 8\n"
     "init.mode = natural_fading\n"
     "run.n_half = 100000\n"
     "run.iters = 100\n"
     "run.seed = 81\n"},
    {"fading_upper_16db",
     "experiment = upper\n"
     "channel.kind = fading\n"
     "channel.fdt = 0.1\n"
     "snr.list = 16\n"
     "aux.k_amp = 2\n"
     "aux.k_theta = 8\n"
     "init.mode = natural_fading\n"
     "run.n_half = 100000\n"
     "run.iters = 60\n"
     "run.seed = 91\n"},
    {"fading_lower_0db",
     "experiment = lower\n"
     "channel.kind = fading\n"
     "channel.fdt = 0.1\n"
     "snr.list = 0\n"
     "aux.k_amp = 2\n"
     "aux.k_theta = 8\n"
     "init.mode = diff_optimized\n"
     "init.diff_iters = 50\n"
     "run.n_half = 25000\n"
     "run.iters = 50\n"
     "run.gamma_set = 1,2,3,4,5,6,7,8,9,10,100\n"
     "run.seed = 101\n"},
    {"fading_hlb",
     "experiment = entropy_lb\n"
     "channel.kind = fading\n"
     "channel.fdt = 0.1\n"
     "snr.list = 0, 8, 16\n"
     "entropy_lb.delays = 1,2,3\n"
     "entropy_lb.quad_nodes = 32\n"},
    {"fading_csi_16db",
     "experiment = csi\n"
     "channel.kind = fading\n"
     "channel.fdt = 0.1\n"
     "snr.list = 16\n"
     "csi.samples = 200000\n"
     "run.seed = 111\n"},
    {"fading_sweep",
     "# scaled-down bound sweep over SNR\n"
     "experiment = upper\n"
     "channel.kind = fading\n"
     "channel.fdt = 0.1\n"
     "snr.list = 0, 4, 8, 12, 16\n"
     "aux.k_amp = 2\n"
     "aux.k_theta = 8\n"
     "init.mode = natural_fading\n"
     "run.n_half = 50000\n"
     "run.iters = 40\n"
     "run.seed = 121\n"},
    {"ch3_soblex",
     "experiment = soblex_baseline\n"
     "channel.kind = pr\n"
     "channel.h = 0.5774, -0.5774, -0.5774\n"
     "channel.quantizer.thresholds = -2.25, -1.5, -0.75, 0, 0.75, 1.5, 2.25\n"
     "snr.list = 0\n"
     "aux.m_hat = 1\n"
     "run.n_half = 250000\n"
     "run.runs = 20\n"
     "soblex.budgets = 1000, 2000, 10000\n"
     "soblex.frac_tol = 1e-5\n"
     "run.seed = 131\n"},
};

}  // namespace

std::vector<std::string> list_recipes() {
    std::vector<std::string> names;
    for (const auto& [name, text] : kRecipes) names.push_back(name);
    std::sort(names.begin(), names.end());
    return names;
}

std::optional<std::string> recipe_text(const std::string& name) {
    for (const auto& [n, text] : kRecipes)
        if (name == n) return std::string(text);
    return std::nullopt;
}

}  // namespace memrate
