#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace memrate {

// Box-constrained objective with a hard cap on evaluations. Points are clipped
// to the box before evaluation.
struct BoxedObjective {
    int dim = 0;
    std::vector<double> lo, hi;
    std::function<double(const std::vector<double>&)> f;
    std::int64_t call_budget = 0;
    std::int64_t call_count = 0;

    bool exhausted() const { return call_count >= call_budget; }
    double eval(std::vector<double> x);
};

// 32-bit Gray-code Sobol sequence; point 0 is the origin. Jumping to an
// arbitrary start index is O(bits), so disjoint index ranges give
// non-overlapping streams.
class SobolSequence {
public:
    SobolSequence(int dim, std::uint64_t start_index = 0);
    static int max_dimension();

    void next(std::vector<double>& point);
    std::uint64_t index() const { return n_; }

private:
    int dim_;
    std::uint64_t n_;
    std::vector<std::uint32_t> v_;   // [dim * 32]
    std::vector<std::uint32_t> ix_;  // current integer state
};

std::vector<std::vector<double>> sobol_points(int dim, std::int64_t n,
                                              std::uint64_t start_index = 0);

struct MinimizeResult {
    std::vector<double> x;
    double fmin = 0.0;
    std::int64_t evals = 0;
    bool budget_exhausted = false;
};

// Standard reflect/expand/contract/shrink simplex descent; terminates when the
// fractional spread of the simplex values drops below frac_tol or the
// objective budget runs out (best-so-far is returned with the flag set).
MinimizeResult nelder_mead(BoxedObjective& obj, std::vector<std::vector<double>> init_simplex,
                           double frac_tol);

struct SoblexConfig {
    std::int64_t initial_budget = 1000;  // Sobol sampling calls before the simplex phase
    double frac_tol = 1e-5;
    std::uint64_t seed_offset = 0;  // Sobol start index
};

// Sobol-prefix sampling, then a simplex seeded from the dim+1 lowest-cost points.
MinimizeResult soblex(BoxedObjective& obj, const SoblexConfig& cfg);

// stick-breaking map from (k-1) box coordinates in [0,1] to a length-k pmf
std::vector<double> stick_breaking(const std::vector<double>& u, int k);

}  // namespace memrate
