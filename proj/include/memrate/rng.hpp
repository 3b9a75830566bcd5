#pragma once

#include <cmath>
#include <cstdint>

namespace memrate {

// SplitMix64 used as a counter-based generator: output k of stream s is
// mix(base(s) + k * GAMMA). Jumping to any position is O(1), so windows and
// workers get independent, reproducible streams derived from one master seed.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t master_seed, std::uint64_t stream_id = 0)
        : base_(mix(master_seed ^ mix(stream_id + 0x7F4A7C15ULL))), ctr_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = base_ + (++ctr_) * 0x9E3779B97F4A7C15ULL;
        return mix(z);
    }

    // uniform in (0,1); never returns an endpoint so log()/Box-Muller are safe
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller, second value cached
    double next_gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // index into a discrete pmf (cumulative scan; pmf need not be exactly normalized)
    int next_index(const double* pmf, int n) {
        double u = next_unit();
        double c = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            c += pmf[i];
            if (u < c) return i;
        }
        return n - 1;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

private:
    std::uint64_t base_;
    std::uint64_t ctr_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace memrate
