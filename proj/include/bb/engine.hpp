#pragma once

// Replicate generators (informative BB, Rubin, stick-breaking oracle), the
// deterministic parallel bootstrap driver, percentile intervals, two-sample
// differences, and simultaneous confidence bands.
//
// Replicate k always draws from child stream k of the run seed, so results
// are independent of worker count and scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bb/cdf_model.hpp"
#include "bb/prior.hpp"
#include "bb/random.hpp"
#include "bb/special.hpp"

namespace bb {

enum class Scheme { bb, rubin, stick };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::bb: return "bb";
        case Scheme::rubin: return "rubin";
        case Scheme::stick: return "stick";
    }
    return "?";
}

struct EngineOptions {
    int threads = 0;          // 0: hardware concurrency
    double stick_tol = 1e-8;  // residual-mass truncation of the stick oracle
};

/// One BB replicate: n+a draws from F_{n,B} with equal weights when a is an
/// integer; for a = m + beta (0 < beta < 1), n+m+1 draws where the last one
/// carries weight beta/(n+m+beta).  a = 0 reduces to the Efron bootstrap.
inline WeightedAtoms bb_replicate(const MixtureCdf& mix, RandomStream& s) {
    const auto n = mix.data().n();
    const double a = mix.a();
    const double m_floor = std::floor(a);
    const bool integral = (m_floor == a);
    const std::size_t count =
        n + static_cast<std::size_t>(m_floor) + (integral ? 0 : 1);
    std::vector<double> atoms(count), weights(count, 1.0 / (static_cast<double>(n) + a));
    for (std::size_t i = 0; i < count; ++i) atoms[i] = mixture_sample(mix, s);
    if (!integral) weights.back() = (a - m_floor) / (static_cast<double>(n) + a);
    return WeightedAtoms(std::move(atoms), std::move(weights));
}

/// Rubin's degenerate-prior replicate: the observed atoms with
/// Dirichlet(1,...,1) weights (normalized unit exponentials).
inline WeightedAtoms rubin_replicate(const DataSample& data, RandomStream& s) {
    const std::vector<double> ones(data.n(), 1.0);
    return WeightedAtoms(data.values(), sample_dirichlet(ones, s));
}

/// One draw from the exact posterior Dir(aF0 + nF_n) through Sethuraman's
/// construction: atoms i.i.d. F_{n,B}, stick lengths from Beta(1, a+n),
/// truncated when the residual mass falls below tol and renormalized.
inline WeightedAtoms stick_breaking_draw(const DirichletPrior& prior, const DataSample& data,
                                         double tol, RandomStream& s) {
    if (!(tol > 0.0 && tol < 1.0))
        throw std::invalid_argument("stick_breaking_draw: tol must lie in (0,1)");
    const MixtureCdf mix(prior, data);
    const double total_mass = prior.a + static_cast<double>(data.n());
    constexpr std::size_t hard_cap = 10'000'000;
    std::vector<double> atoms, weights;
    double residual = 1.0;
    while (residual >= tol) {
        if (atoms.size() >= hard_cap)
            throw std::runtime_error("stick_breaking_draw: truncation exceeded 1e7 sticks");
        const double x = mixture_sample(mix, s);
        const double b = sample_beta(1.0, total_mass, s);
        atoms.push_back(x);
        weights.push_back(b * residual);
        residual *= 1.0 - b;
    }
    KahanSum sum;
    for (double w : weights) sum.add(w);
    const double t = sum.value();
    std::size_t imax = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] /= t;
        if (weights[i] > weights[imax]) imax = i;
    }
    KahanSum check;
    for (double w : weights) check.add(w);
    weights[imax] += 1.0 - check.value();
    return WeightedAtoms(std::move(atoms), std::move(weights));
}

namespace detail {

/// Runs body(k) for k in [0, total); work is strided across workers and any
/// first exception (lowest k among workers) is rethrown after the join.
template <class Body>
void parallel_for(std::int64_t total, int threads, const Body& body) {
    int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    if (t == 1 || total < 2) {
        for (std::int64_t k = 0; k < total; ++k) body(k);
        return;
    }
    t = static_cast<int>(std::min<std::int64_t>(t, total));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::int64_t k = w; k < total; k += t) body(k);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

struct DrawsMeta {
    std::uint64_t seed = 0;
    std::int64_t boot = 0;
    std::string scheme;
};

/// Sorted replicate functional values theta*; the empirical face of the
/// estimated posterior G_hat.
class PosteriorDraws {
public:
    PosteriorDraws(std::vector<double> values, DrawsMeta meta)
        : values_(std::move(values)), meta_(std::move(meta)) {
        if (values_.empty()) throw std::invalid_argument("PosteriorDraws: need boot >= 1");
        std::sort(values_.begin(), values_.end());
    }

    const std::vector<double>& values() const { return values_; }
    const DrawsMeta& meta() const { return meta_; }
    std::int64_t boot() const { return static_cast<std::int64_t>(values_.size()); }
    double mean() const { return compensated_mean(values_); }
    double sd() const { return std::sqrt(compensated_pop_variance(values_)); }

private:
    std::vector<double> values_;
    DrawsMeta meta_;
};

/// Quantiles of a sorted empirical distribution under the midpoint-knot
/// interpolation: the distinct values v_j carry knot probabilities
/// (c_{j-1} + c_j)/(2B); linear between knots, clamped outside.
class MidpointQuantile {
public:
    explicit MidpointQuantile(const std::vector<double>& sorted) {
        const double two_b = 2.0 * static_cast<double>(sorted.size());
        std::size_t cum_prev = 0, i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            v_.push_back(sorted[i]);
            q_.push_back(static_cast<double>(cum_prev + j) / two_b);
            cum_prev = j;
            i = j;
        }
    }

    double operator()(double p) const {
        if (p <= q_.front()) return v_.front();
        if (p >= q_.back()) return v_.back();
        const auto it = std::lower_bound(q_.begin(), q_.end(), p);
        const std::size_t j = static_cast<std::size_t>(it - q_.begin());
        if (q_[j] == p) return v_[j];
        const double t = (p - q_[j - 1]) / (q_[j] - q_[j - 1]);
        return v_[j - 1] + t * (v_[j] - v_[j - 1]);
    }

private:
    std::vector<double> v_, q_;
};

struct IntervalResult {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;    // 1 - 2 alpha
    double estimate = 0.0; // mean of draws
    bool low_boot_warning = false;
};

/// BB percentile interval: interpolated quantiles of the draws at alpha and
/// 1-alpha.  Sets a warning when boot*alpha < 1 (the tail cannot be resolved).
inline IntervalResult percentile_interval(const PosteriorDraws& draws, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("percentile_interval: alpha must lie in (0, 1/2)");
    const MidpointQuantile q(draws.values());
    IntervalResult r;
    r.lower = q(alpha);
    r.upper = q(1.0 - alpha);
    r.level = 1.0 - 2.0 * alpha;
    r.estimate = draws.mean();
    r.low_boot_warning = static_cast<double>(draws.boot()) * alpha < 1.0;
    return r;
}

/// boot replicate functional values; replicate k is generated from child
/// stream k of the seed, so the result is order- and worker-independent.
inline PosteriorDraws run_bootstrap(Scheme scheme, const Functional& f,
                                    const DirichletPrior& prior, const DataSample& data,
                                    std::int64_t boot, std::uint64_t seed,
                                    const EngineOptions& opts = {}) {
    if (boot < 1) throw std::invalid_argument("run_bootstrap: boot must be >= 1");
    const MixtureCdf mix(prior, data);
    const RandomStream root(seed);
    std::vector<double> values(static_cast<std::size_t>(boot));
    detail::parallel_for(boot, opts.threads, [&](std::int64_t k) {
        try {
            RandomStream s = root.child(static_cast<std::uint64_t>(k));
            WeightedAtoms rep;
            switch (scheme) {
                case Scheme::bb: rep = bb_replicate(mix, s); break;
                case Scheme::rubin: rep = rubin_replicate(data, s); break;
                case Scheme::stick:
                    rep = stick_breaking_draw(prior, data, opts.stick_tol, s);
                    break;
            }
            values[static_cast<std::size_t>(k)] = f(rep);
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(k) + ": " + e.what());
        }
    });
    return PosteriorDraws(std::move(values), {seed, boot, scheme_name(scheme)});
}

/// Two-sample difference draws eval(f1, rep1) - eval(f2, rep2).  Each sample
/// gets its own sub-stream per replicate; `paired` reuses the first sample's
/// sub-stream for the second, index-coupling the two resamples.
inline PosteriorDraws two_sample_bb(const Functional& f1, const Functional& f2,
                                    const DirichletPrior& prior1, const DataSample& data1,
                                    const DirichletPrior& prior2, const DataSample& data2,
                                    std::int64_t boot, std::uint64_t seed, bool paired = false,
                                    const EngineOptions& opts = {}) {
    if (boot < 1) throw std::invalid_argument("two_sample_bb: boot must be >= 1");
    const MixtureCdf mix1(prior1, data1), mix2(prior2, data2);
    const RandomStream root(seed);
    std::vector<double> values(static_cast<std::size_t>(boot));
    detail::parallel_for(boot, opts.threads, [&](std::int64_t k) {
        try {
            const RandomStream base = root.child(static_cast<std::uint64_t>(k));
            RandomStream s1 = base.child(0);
            RandomStream s2 = paired ? base.child(0) : base.child(1);
            values[static_cast<std::size_t>(k)] =
                f1(bb_replicate(mix1, s1)) - f2(bb_replicate(mix2, s2));
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(k) + ": " + e.what());
        }
    });
    return PosteriorDraws(std::move(values), {seed, boot, "two-sample-bb"});
}

struct BandGrid {
    double lo = 0.0;
    double hi = 0.0;
    int points = 101;
};

/// Grid spanning the 5th-95th percentile range of F_{n,B}; stays clear of the
/// F in {0,1} singularities of the standardization.
inline BandGrid default_band_grid(const MixtureCdf& mix, int points = 101) {
    return {mix.inverse_cdf(0.05), mix.inverse_cdf(0.95), points};
}

struct BandResult {
    double c = 0.0;
    double d = 0.0;
    std::vector<double> grid;
    std::vector<double> center; // F_{n,B} on the grid
    std::vector<double> lower;
    std::vector<double> upper;
    double coverage = 0.0; // achieved replicate fraction
};

/// Simultaneous band F_{n,B} -c*s <= F <= F_{n,B} + d*s with
/// s = [F_{n,B}(1-F_{n,B})]^{1/2}: (c, d) minimizes c+d subject to the
/// fraction of replicates with -c <= theta*_min and theta*_max <= d being at
/// least 1-2*alpha, solved by sweeping the sorted (min, max) pairs.
inline BandResult confidence_band(const DirichletPrior& prior, const DataSample& data,
                                  double alpha, const BandGrid& grid, std::int64_t boot,
                                  std::uint64_t seed, const EngineOptions& opts = {}) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("confidence_band: alpha must lie in (0, 1/2)");
    if (grid.points < 2 || !(grid.lo < grid.hi))
        throw std::invalid_argument("confidence_band: bad grid");
    if (boot < 1) throw std::invalid_argument("confidence_band: boot must be >= 1");
    const MixtureCdf mix(prior, data);

    BandResult out;
    out.grid.resize(static_cast<std::size_t>(grid.points));
    out.center.resize(out.grid.size());
    std::vector<double> scale(out.grid.size());
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
        const double t = grid.lo + (grid.hi - grid.lo) * static_cast<double>(g) /
                                       static_cast<double>(grid.points - 1);
        const double F = mix.cdf(t);
        if (!(F > 0.0 && F < 1.0))
            throw std::invalid_argument(
                "confidence_band: F_{n,B} hits 0 or 1 on the grid at t=" + std::to_string(t));
        out.grid[g] = t;
        out.center[g] = F;
        scale[g] = std::sqrt(F * (1.0 - F));
    }

    std::vector<double> mins(static_cast<std::size_t>(boot));
    std::vector<double> maxs(static_cast<std::size_t>(boot));
    const RandomStream root(seed);
    detail::parallel_for(boot, opts.threads, [&](std::int64_t k) {
        RandomStream s = root.child(static_cast<std::uint64_t>(k));
        const WeightedAtoms rep = bb_replicate(mix, s);
        auto sorted = rep.sorted();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        std::size_t i = 0;
        double cum = 0.0;
        for (std::size_t g = 0; g < out.grid.size(); ++g) {
            while (i < sorted.size() && sorted[i].first <= out.grid[g]) cum += sorted[i++].second;
            const double z = (cum - out.center[g]) / scale[g];
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
        mins[static_cast<std::size_t>(k)] = lo;
        maxs[static_cast<std::size_t>(k)] = hi;
    });

    // Need K of the boot pairs inside [-c, d].  Sweep candidate c = -min_(i)
    // with mins in decreasing order; d is then the K-th smallest max among the
    // included replicates.
    const auto b = static_cast<std::size_t>(boot);
    const auto K = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(b),
                         std::ceil((1.0 - 2.0 * alpha) * static_cast<double>(boot) - 1e-9)));
    std::vector<std::size_t> order(b);
    for (std::size_t i = 0; i < b; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return mins[x] > mins[y]; });
    std::vector<double> included; // sorted maxima of the included replicates
    included.reserve(b);
    double best = std::numeric_limits<double>::infinity();
    double best_c = 0.0, best_d = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double mx = maxs[order[i]];
        included.insert(std::upper_bound(included.begin(), included.end(), mx), mx);
        if (included.size() < std::max<std::size_t>(K, 1)) continue;
        const double c = -mins[order[i]];
        const double d = included[std::max<std::size_t>(K, 1) - 1];
        if (c + d < best) {
            best = c + d;
            best_c = c;
            best_d = d;
        }
    }
    out.c = best_c;
    out.d = best_d;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < b; ++i)
        if (-best_c <= mins[i] && maxs[i] <= best_d) ++covered;
    out.coverage = static_cast<double>(covered) / static_cast<double>(boot);
    out.lower.resize(out.grid.size());
    out.upper.resize(out.grid.size());
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
        out.lower[g] = out.center[g] - best_c * scale[g];
        out.upper[g] = out.center[g] + best_d * scale[g];
    }
    return out;
}

} // namespace bb
