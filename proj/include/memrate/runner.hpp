#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memrate/config.hpp"

namespace memrate {

struct RunOptions {
    std::string out_dir = ".";
    int threads = 0;  // 0: MEMRATE_THREADS or hardware default
    bool strict = false;
    bool dry_run = false;
    std::optional<std::uint64_t> seed_override;
};

struct RunReport {
    int exit_code = 0;  // 0 ok, 2 config error, 3 numeric warning in strict mode
    std::vector<std::string> warnings;
    std::string results_path;
    std::string trace_path;
    std::vector<std::string> summary_lines;
};

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace memrate
