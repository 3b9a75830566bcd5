#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memrate/trellis.hpp"

namespace memrate {

inline constexpr double kEpsFloor = 1e-12;

// Finite-state machine channel with a per-branch transition probability
// W(s_next | s_prev, x) and per-branch output row W(y | b). Used both for
// original channels that admit a finite trellis and for the tunable forward
// auxiliary models.
struct FsmcModel {
    TrellisSection trellis;
    int n_outputs = 0;
    std::vector<double> trans;  // [branch]
    std::vector<double> out;    // [branch * n_outputs + y]

    double& out_at(int b, int y) { return out[static_cast<std::size_t>(b) * n_outputs + y]; }
    double out_at(int b, int y) const { return out[static_cast<std::size_t>(b) * n_outputs + y]; }

    // floor every output row at kEpsFloor and renormalize it
    void floor_and_normalize_out();
    // renormalize transition probabilities over each (s_prev, x) group
    void normalize_trans();
};

using AuxForwardParams = FsmcModel;

// Backward auxiliary model: a strictly positive table v(b, y_ctx) where the
// context word is (y_{l-d1}, ..., y_{l+d2}) encoded base-K with the earliest
// symbol in the most significant digit.
struct AuxBackwardParams {
    TrellisSection trellis;
    int n_outputs = 0;
    int d1 = 0;
    int d2 = 0;
    std::vector<double> v;  // [branch * n_ctx + ctx]

    int context_len() const { return d1 + d2 + 1; }
    std::int64_t n_ctx() const {
        std::int64_t n = 1;
        for (int i = 0; i < context_len(); ++i) n *= n_outputs;
        return n;
    }
    double& v_at(int b, std::int64_t ctx) { return v[static_cast<std::size_t>(b) * n_ctx() + ctx]; }
    double v_at(int b, std::int64_t ctx) const {
        return v[static_cast<std::size_t>(b) * n_ctx() + ctx];
    }

    // rescale so the largest entry is 1 (the bound is invariant to a global scale)
    void rescale_max_to_one();
};

// natural transitions for a controllable trellis (single successor per (s,x))
// or uniform over successors otherwise
std::vector<double> natural_transitions(const TrellisSection& ts);

void check_forward_params(const FsmcModel& m, double tol = 1e-9);

// Text checkpoint format, keyed by branch id / context word. Round-trips losslessly.
void save_forward_params(const FsmcModel& m, std::ostream& os);
FsmcModel load_forward_params(std::istream& is);
void save_backward_params(const AuxBackwardParams& p, std::ostream& os);
AuxBackwardParams load_backward_params(std::istream& is);

std::string forward_params_to_string(const FsmcModel& m);
std::string backward_params_to_string(const AuxBackwardParams& p);

}  // namespace memrate
