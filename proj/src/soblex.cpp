#include "memrate/soblex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace memrate {

namespace {
#include "sobol_data.inc"
constexpr int kBits = 32;
}  // namespace

double BoxedObjective::eval(std::vector<double> x) {
    if (call_count >= call_budget) throw std::runtime_error("objective: call budget exceeded");
    for (int i = 0; i < dim; ++i)
        x[static_cast<std::size_t>(i)] = std::clamp(x[static_cast<std::size_t>(i)],
                                                    lo[static_cast<std::size_t>(i)],
                                                    hi[static_cast<std::size_t>(i)]);
    ++call_count;
    return f(x);
}

int SobolSequence::max_dimension() { return kSobolDims; }

SobolSequence::SobolSequence(int dim, std::uint64_t start_index) : dim_(dim), n_(start_index) {
    if (dim < 1 || dim > kSobolDims)
        throw std::invalid_argument("SobolSequence: dimension out of the supported range");
    v_.assign(static_cast<std::size_t>(dim) * kBits, 0);

    for (int j = 0; j < kBits; ++j) v_[static_cast<std::size_t>(j)] = 1u << (kBits - 1 - j);
    for (int k = 1; k < dim; ++k) {
        std::uint32_t* vk = v_.data() + static_cast<std::size_t>(k) * kBits;
        const unsigned g = kSobolPolyDegree[k - 1];
        const unsigned code = kSobolPolyCode[k - 1];
        for (unsigned j = 0; j < g; ++j)
            vk[j] = kSobolInit[k - 1][j] << (kBits - 1 - j);
        for (int l = static_cast<int>(g); l < kBits; ++l) {
            std::uint32_t n = vk[l - g] >> g;
            for (unsigned j = 1; j < g; ++j)
                if ((code >> (g - j - 1)) & 1u) n ^= vk[l - j];
            n ^= vk[l - g];
            vk[l] = n;
        }
    }

    // state of point n: XOR of direction integers over the set bits of gray(n)
    ix_.assign(static_cast<std::size_t>(dim), 0);
    std::uint64_t gray = start_index ^ (start_index >> 1);
    for (int j = 0; j < kBits; ++j)
        if ((gray >> j) & 1u)
            for (int k = 0; k < dim; ++k)
                ix_[static_cast<std::size_t>(k)] ^= v_[static_cast<std::size_t>(k) * kBits + j];
}

void SobolSequence::next(std::vector<double>& point) {
    point.resize(static_cast<std::size_t>(dim_));
    for (int k = 0; k < dim_; ++k)
        point[static_cast<std::size_t>(k)] = ix_[static_cast<std::size_t>(k)] * 0x1.0p-32;
    std::uint64_t m = n_ + 1;
    int j = 0;
    while (m & 1u) {
        m >>= 1;
        ++j;
    }
    for (int k = 0; k < dim_; ++k)
        ix_[static_cast<std::size_t>(k)] ^= v_[static_cast<std::size_t>(k) * kBits + j];
    ++n_;
}

std::vector<std::vector<double>> sobol_points(int dim, std::int64_t n, std::uint64_t start_index) {
    SobolSequence seq(dim, start_index);
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) seq.next(pts[static_cast<std::size_t>(i)]);
    return pts;
}

MinimizeResult nelder_mead(BoxedObjective& obj, std::vector<std::vector<double>> simplex,
                           double frac_tol) {
    const int d = obj.dim;
    if (static_cast<int>(simplex.size()) != d + 1)
        throw std::invalid_argument("nelder_mead: need dim+1 initial points");
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;

    MinimizeResult res;
    std::vector<double> fv(simplex.size());
    auto guarded_eval = [&](const std::vector<double>& x, double& out) {
        if (obj.exhausted()) return false;
        out = obj.eval(x);
        return true;
    };

    for (std::size_t i = 0; i < simplex.size(); ++i)
        if (!guarded_eval(simplex[i], fv[i])) {
            res.budget_exhausted = true;
            fv.resize(i);
            simplex.resize(i);
            break;
        }
    if (simplex.empty()) throw std::runtime_error("nelder_mead: no budget for initial simplex");

    auto order = [&] {
        std::vector<std::size_t> idx(simplex.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (std::size_t i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fv[i]);
        }
        simplex.swap(s2);
        fv.swap(f2);
    };
    order();

    while (!res.budget_exhausted && simplex.size() == static_cast<std::size_t>(d) + 1) {
        double flo = fv.front(), fhi = fv.back();
        double spread = 2.0 * std::abs(fhi - flo) / (std::abs(fhi) + std::abs(flo) + 1e-300);
        if (spread < frac_tol) break;

        std::vector<double> centroid(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < d; ++c)
                centroid[static_cast<std::size_t>(c)] += simplex[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] / d;

        auto blend = [&](double t) {
            std::vector<double> p(static_cast<std::size_t>(d));
            for (int c = 0; c < d; ++c)
                p[static_cast<std::size_t>(c)] =
                    centroid[static_cast<std::size_t>(c)] +
                    t * (simplex.back()[static_cast<std::size_t>(c)] - centroid[static_cast<std::size_t>(c)]);
            return p;
        };

        double fr = 0.0;
        std::vector<double> xr = blend(-alpha);
        if (!guarded_eval(xr, fr)) {
            res.budget_exhausted = true;
            break;
        }
        if (fr < fv.front()) {
            double fe = 0.0;
            std::vector<double> xe = blend(-gamma);
            if (!guarded_eval(xe, fe)) {
                res.budget_exhausted = true;
                simplex.back() = xr;
                fv.back() = fr;
                order();
                break;
            }
            if (fe < fr) {
                simplex.back() = xe;
                fv.back() = fe;
            } else {
                simplex.back() = xr;
                fv.back() = fr;
            }
        } else if (fr < fv[fv.size() - 2]) {
            simplex.back() = xr;
            fv.back() = fr;
        } else {
            double fc = 0.0;
            std::vector<double> xc = blend(fr < fv.back() ? -rho : rho);
            bool ok = guarded_eval(xc, fc);
            if (ok && fc < std::min(fr, fv.back())) {
                simplex.back() = xc;
                fv.back() = fc;
            } else if (ok) {
                // shrink toward the best vertex
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    for (int c = 0; c < d; ++c)
                        simplex[i][static_cast<std::size_t>(c)] =
                            simplex[0][static_cast<std::size_t>(c)] +
                            shrink * (simplex[i][static_cast<std::size_t>(c)] -
                                      simplex[0][static_cast<std::size_t>(c)]);
                    if (!guarded_eval(simplex[i], fv[i])) {
                        res.budget_exhausted = true;
                        break;
                    }
                }
            } else {
                res.budget_exhausted = true;
                if (fr < fv.back()) {
                    simplex.back() = xr;
                    fv.back() = fr;
                }
                order();
                break;
            }
        }
        order();
    }

    order();
    res.x = simplex.front();
    res.fmin = fv.front();
    res.evals = obj.call_count;
    return res;
}

MinimizeResult soblex(BoxedObjective& obj, const SoblexConfig& cfg) {
    const int d = obj.dim;
    if (cfg.initial_budget < d + 1)
        throw std::invalid_argument("soblex: initial budget below dim+1");

    SobolSequence seq(d, cfg.seed_offset);
    std::vector<std::pair<double, std::vector<double>>> samples;
    samples.reserve(static_cast<std::size_t>(cfg.initial_budget));
    std::vector<double> unit, point(static_cast<std::size_t>(d));
    double best_seen = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < cfg.initial_budget && !obj.exhausted(); ++i) {
        seq.next(unit);
        for (int c = 0; c < d; ++c)
            point[static_cast<std::size_t>(c)] =
                obj.lo[static_cast<std::size_t>(c)] +
                unit[static_cast<std::size_t>(c)] * (obj.hi[static_cast<std::size_t>(c)] -
                                                     obj.lo[static_cast<std::size_t>(c)]);
        double fv = obj.eval(point);
        best_seen = std::min(best_seen, fv);
        samples.emplace_back(fv, point);
    }
    std::stable_sort(samples.begin(), samples.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::vector<double>> simplex;
    for (int i = 0; i <= d && i < static_cast<int>(samples.size()); ++i)
        simplex.push_back(samples[static_cast<std::size_t>(i)].second);

    MinimizeResult res = nelder_mead(obj, std::move(simplex), cfg.frac_tol);
    if (best_seen < res.fmin) {
        res.fmin = best_seen;
        res.x = samples.front().second;
    }
    return res;
}

std::vector<double> stick_breaking(const std::vector<double>& u, int k) {
    std::vector<double> p(static_cast<std::size_t>(k));
    double rem = 1.0;
    for (int i = 0; i < k - 1; ++i) {
        double ui = std::clamp(u[static_cast<std::size_t>(i)], 0.0, 1.0);
        p[static_cast<std::size_t>(i)] = rem * ui;
        rem *= 1.0 - ui;
    }
    p[static_cast<std::size_t>(k) - 1] = rem;
    return p;
}

}  // namespace memrate
