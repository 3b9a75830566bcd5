#include "memrate/trellis.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace memrate {

Alphabet binary_bipolar() { return Alphabet{{-1.0, +1.0}}; }
Alphabet binary_bits() { return Alphabet{{0.0, 1.0}}; }

Alphabet index_alphabet(int k) {
    Alphabet a;
    a.symbols.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) a.symbols[static_cast<std::size_t>(i)] = i;
    return a;
}

int TrellisSection::find_branch(int s_prev, int x, int s_next) const {
    for (const Branch& b : branches)
        if (b.s_prev == s_prev && b.x == x && b.s_next == s_next) return b.id;
    return -1;
}

std::vector<int> TrellisSection::outgoing(int s_prev, int x) const {
    std::vector<int> out;
    for (const Branch& b : branches)
        if (b.s_prev == s_prev && b.x == x) out.push_back(b.id);
    return out;
}

TrellisSection build_pr_trellis(int memory, const Alphabet& input_alphabet,
                                const TrellisLimits& limits) {
    if (memory < 0) throw std::invalid_argument("build_pr_trellis: memory must be >= 0");
    const int a = input_alphabet.size();
    if (a < 2) throw std::invalid_argument("build_pr_trellis: need at least a binary alphabet");

    std::int64_t n_states = 1;
    for (int m = 0; m < memory; ++m) {
        n_states *= a;
        if (n_states > limits.max_states)
            throw std::length_error("build_pr_trellis: state count exceeds configured limit");
    }
    if (n_states * a > limits.max_branches)
        throw std::length_error("build_pr_trellis: branch count exceeds configured limit");

    TrellisSection ts;
    ts.n_states = static_cast<int>(n_states);
    ts.input_alphabet = input_alphabet;
    ts.controllable = true;
    ts.branches.reserve(static_cast<std::size_t>(n_states) * a);
    for (int s = 0; s < ts.n_states; ++s) {
        for (int x = 0; x < a; ++x) {
            // state digits hold (x_{l-M}..x_{l-1}), newest input in digit 0
            int s_next = memory > 0 ? (s * a + x) % static_cast<int>(n_states) : 0;
            Branch b;
            b.id = static_cast<std::int32_t>(ts.branches.size());
            b.s_prev = s;
            b.x = x;
            b.s_next = s_next;
            ts.branches.push_back(b);
        }
    }
    return ts;
}

TrellisSection build_ge_trellis() {
    TrellisSection ts = build_full_trellis(2, binary_bits());
    ts.controllable = false;
    return ts;
}

TrellisSection build_full_trellis(int n_states, const Alphabet& input_alphabet,
                                  const TrellisLimits& limits) {
    if (n_states < 1) throw std::invalid_argument("build_full_trellis: need n_states >= 1");
    const int a = input_alphabet.size();
    if (static_cast<std::int64_t>(n_states) > limits.max_states)
        throw std::length_error("build_full_trellis: state count exceeds configured limit");
    std::int64_t nb = static_cast<std::int64_t>(n_states) * n_states * a;
    if (nb > limits.max_branches)
        throw std::length_error("build_full_trellis: branch count exceeds configured limit");

    TrellisSection ts;
    ts.n_states = n_states;
    ts.input_alphabet = input_alphabet;
    ts.controllable = (n_states == 1);
    ts.branches.reserve(static_cast<std::size_t>(nb));
    for (int sp = 0; sp < n_states; ++sp)
        for (int x = 0; x < a; ++x)
            for (int sn = 0; sn < n_states; ++sn) {
                Branch b;
                b.id = static_cast<std::int32_t>(ts.branches.size());
                b.s_prev = sp;
                b.x = x;
                b.s_next = sn;
                ts.branches.push_back(b);
            }
    return ts;
}

TrellisReport validate_trellis(const TrellisSection& ts) {
    TrellisReport rep;
    auto add = [&rep](TrellisFinding::Kind k, std::string d) {
        rep.findings.push_back({k, std::move(d)});
    };

    std::set<std::tuple<int, int, int>> seen;
    std::map<std::pair<int, int>, std::set<int>> next_of;
    std::vector<char> has_outgoing(static_cast<std::size_t>(ts.n_states), 0);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(ts.n_states));
    for (const Branch& b : ts.branches) {
        auto key = std::make_tuple(b.s_prev, b.x, b.s_next);
        if (!seen.insert(key).second)
            add(TrellisFinding::duplicate_branch,
                "duplicate (s_prev,x,s_next)=(" + std::to_string(b.s_prev) + "," +
                    std::to_string(b.x) + "," + std::to_string(b.s_next) + ")");
        next_of[{b.s_prev, b.x}].insert(b.s_next);
        has_outgoing[static_cast<std::size_t>(b.s_prev)] = 1;
        adj[static_cast<std::size_t>(b.s_prev)].push_back(b.s_next);
    }

    for (int s = 0; s < ts.n_states; ++s)
        if (!has_outgoing[static_cast<std::size_t>(s)])
            add(TrellisFinding::dangling_state, "state " + std::to_string(s) + " has no outgoing branch");

    // reachability from the fixed initial state 0
    std::vector<char> reach(static_cast<std::size_t>(ts.n_states), 0);
    std::vector<int> stack{0};
    if (ts.n_states > 0) reach[0] = 1;
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        for (int t : adj[static_cast<std::size_t>(s)])
            if (!reach[static_cast<std::size_t>(t)]) {
                reach[static_cast<std::size_t>(t)] = 1;
                stack.push_back(t);
            }
    }
    for (int s = 0; s < ts.n_states; ++s)
        if (!reach[static_cast<std::size_t>(s)])
            add(TrellisFinding::unreachable_state, "state " + std::to_string(s) + " unreachable from state 0");

    if (ts.controllable) {
        for (const auto& [key, nexts] : next_of)
            if (nexts.size() > 1)
                add(TrellisFinding::controllability_mismatch,
                    "controllable flag set but (s_prev,x)=(" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ") has " + std::to_string(nexts.size()) +
                        " successors");
    }
    return rep;
}

std::string dump_trellis(const TrellisSection& ts) {
    std::string out;
    char line[64];
    for (const Branch& b : ts.branches) {
        std::snprintf(line, sizeof line, "%d %d %d %d\n", b.id, b.s_prev, b.x, b.s_next);
        out += line;
    }
    return out;
}

double Source::log_symbol_prob(int x) const { return std::log(q[static_cast<std::size_t>(x)]); }

Source iud_source(const Alphabet& a) {
    Source s;
    s.alphabet = a;
    s.q.assign(static_cast<std::size_t>(a.size()), 1.0 / a.size());
    return s;
}

}  // namespace memrate
