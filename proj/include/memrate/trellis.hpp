#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace memrate {

// Ordered finite symbol set. Inputs carry their numeric value (e.g. -1/+1 for
// bipolar signaling); output alphabets are plain bin indices 0..K-1.
struct Alphabet {
    std::vector<double> symbols;

    int size() const { return static_cast<int>(symbols.size()); }
    double value(int i) const { return symbols[static_cast<std::size_t>(i)]; }
};

Alphabet binary_bipolar();        // {-1, +1}
Alphabet binary_bits();           // {0, 1}
Alphabet index_alphabet(int k);   // {0, 1, ..., k-1}

struct Branch {
    std::int32_t id;
    std::int32_t s_prev;
    std::int32_t x;       // input symbol index
    std::int32_t s_next;
};

// Time-invariant trellis section. Branch ids are dense 0..|B|-1 and the
// (s_prev, x, s_next) triple of each branch is unique. `controllable` means
// (s_prev, x) determines s_next, i.e. the input sequence drives the state.
struct TrellisSection {
    int n_states = 0;
    Alphabet input_alphabet;
    std::vector<Branch> branches;
    bool controllable = false;

    int n_branches() const { return static_cast<int>(branches.size()); }
    int n_inputs() const { return input_alphabet.size(); }

    // -1 when no such branch exists
    int find_branch(int s_prev, int x, int s_next) const;
    // branch ids leaving (s_prev, x)
    std::vector<int> outgoing(int s_prev, int x) const;
};

struct TrellisLimits {
    std::int64_t max_states = 1 << 22;
    std::int64_t max_branches = 1 << 23;
};

// Partial-response trellis: states labeled by the last `memory` inputs, the
// most recent input in the lowest base-|X| digit. One branch per (state, input).
TrellisSection build_pr_trellis(int memory, const Alphabet& input_alphabet,
                                const TrellisLimits& limits = {});

// Gilbert-Elliott section: 2 states (0 = good, 1 = bad), data-independent
// transitions, all 8 (s_prev, x, s_next) combinations present.
TrellisSection build_ge_trellis();

// Fully connected section with data-independent transitions.
TrellisSection build_full_trellis(int n_states, const Alphabet& input_alphabet,
                                  const TrellisLimits& limits = {});

struct TrellisFinding {
    enum Kind { duplicate_branch, dangling_state, unreachable_state, controllability_mismatch };
    Kind kind;
    std::string detail;
};

struct TrellisReport {
    std::vector<TrellisFinding> findings;
    bool valid() const { return findings.empty(); }
};

TrellisReport validate_trellis(const TrellisSection& ts);

// One line per branch: "id s_prev x s_next". Golden-file format.
std::string dump_trellis(const TrellisSection& ts);

// Per-symbol source distribution; only i.u.d. sources are used here but the
// pmf is kept explicit so the inference code never assumes uniformity.
struct Source {
    Alphabet alphabet;
    std::vector<double> q;

    double log_symbol_prob(int x) const;
};

Source iud_source(const Alphabet& a);

}  // namespace memrate
