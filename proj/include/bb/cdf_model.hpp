#pragma once

// Data samples, the posterior-mean mixture CDF F_{n,B}, weighted discrete
// distributions, plug-in functionals, and the closed-form posterior moment
// formulas for F(t) and the mean/variance functionals.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bb/prior.hpp"
#include "bb/random.hpp"
#include "bb/special.hpp"

namespace bb {

/// Observed i.i.d. sample; stored sorted, carries the empirical CDF F_n.
class DataSample {
public:
    explicit DataSample(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw std::invalid_argument("DataSample: need n >= 1");
        for (double x : values_)
            if (!std::isfinite(x)) throw std::invalid_argument("DataSample: non-finite value");
        std::sort(values_.begin(), values_.end());
    }

    const std::vector<double>& values() const { return values_; }
    std::size_t n() const { return values_.size(); }

    double ecdf(double t) const {
        const auto it = std::upper_bound(values_.begin(), values_.end(), t);
        return static_cast<double>(it - values_.begin()) / static_cast<double>(n());
    }
    double mean() const { return compensated_mean(values_); }
    double pop_variance() const { return compensated_pop_variance(values_); }

private:
    std::vector<double> values_;
};

/// Posterior-mean CDF  F_{n,B}(t) = (a F0(t) + n F_n(t)) / (a + n).
class MixtureCdf {
public:
    MixtureCdf(DirichletPrior prior, DataSample data)
        : prior_(std::move(prior)), data_(std::move(data)) {}

    const DirichletPrior& prior() const { return prior_; }
    const DataSample& data() const { return data_; }
    double a() const { return prior_.a; }
    double n() const { return static_cast<double>(data_.n()); }
    double prior_weight() const { return prior_.a / (prior_.a + n()); }

    double cdf(double t) const {
        const double w = prior_weight();
        const double f0 = w > 0.0 ? prior_.guess.cdf(t) : 0.0;
        return w * f0 + (1.0 - w) * data_.ecdf(t);
    }

    /// inf{t : F_{n,B}(t) >= p}, by bisection over a bracketing interval.
    double inverse_cdf(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("MixtureCdf::inverse_cdf: p in (0,1) required");
        double lo = data_.values().front(), hi = data_.values().back();
        if (prior_weight() > 0.0 && prior_.guess.is_continuous()) {
            lo = std::min(lo, prior_.guess.inverse_cdf(std::min(p, 1e-9)));
            hi = std::max(hi, prior_.guess.inverse_cdf(std::max(p, 1.0 - 1e-9)));
        }
        double span = std::max(1.0, hi - lo);
        while (cdf(lo) >= p) lo -= span;
        while (cdf(hi) < p) hi += span;
        for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::fabs(hi)); ++i) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) >= p ? hi : lo) = mid;
        }
        return hi;
    }

private:
    DirichletPrior prior_;
    DataSample data_;
};

/// One draw from F_{n,B}: with probability a/(a+n) an inverse-CDF draw from
/// F0, otherwise a uniformly chosen data value.  Consumes exactly two
/// uniforms on either branch.
inline double mixture_sample(const MixtureCdf& mix, RandomStream& s) {
    const double u_branch = s.uniform();
    const double u_value = s.uniform();
    if (u_branch < mix.prior_weight()) return mix.prior().guess.inverse_cdf(u_value);
    const auto& v = mix.data().values();
    auto idx = static_cast<std::size_t>(u_value * static_cast<double>(v.size()));
    if (idx >= v.size()) idx = v.size() - 1;
    return v[idx];
}

/// Finite discrete distribution: the common carrier for BB, Rubin and
/// stick-breaking replicates.
struct WeightedAtoms {
    std::vector<double> atoms;
    std::vector<double> weights;

    WeightedAtoms() = default;
    WeightedAtoms(std::vector<double> a, std::vector<double> w)
        : atoms(std::move(a)), weights(std::move(w)) {
        if (atoms.size() != weights.size() || atoms.empty())
            throw std::invalid_argument("WeightedAtoms: atom/weight size mismatch");
    }

    double cdf(double t) const {
        KahanSum s;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms[i] <= t) s.add(weights[i]);
        return s.value();
    }

    /// (atom, weight) pairs sorted by atom.
    std::vector<std::pair<double, double>> sorted() const {
        std::vector<std::pair<double, double>> p(atoms.size());
        for (std::size_t i = 0; i < atoms.size(); ++i) p[i] = {atoms[i], weights[i]};
        std::sort(p.begin(), p.end());
        return p;
    }

    /// inf{t : cumweight(t) >= p}.
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("WeightedAtoms::quantile: p in (0,1) required");
        const auto s = sorted();
        KahanSum cum;
        for (const auto& [x, w] : s) {
            cum.add(w);
            if (cum.value() >= p) return x;
        }
        return s.back().first;
    }

    double mean() const {
        KahanSum s;
        for (std::size_t i = 0; i < atoms.size(); ++i) s.add(weights[i] * atoms[i]);
        return s.value();
    }
};

/// Finite union of half-open intervals (lo, hi]; members must be disjoint.
struct IntervalUnion {
    std::vector<std::pair<double, double>> parts;

    IntervalUnion() = default;
    IntervalUnion(std::initializer_list<std::pair<double, double>> p) : parts(p) { check(); }
    explicit IntervalUnion(std::vector<std::pair<double, double>> p) : parts(std::move(p)) {
        check();
    }
    static IntervalUnion upto(double t) {
        return IntervalUnion{{-std::numeric_limits<double>::infinity(), t}};
    }

    bool contains(double x) const {
        for (const auto& [lo, hi] : parts)
            if (x > lo && x <= hi) return true;
        return false;
    }
    /// F-measure of the union for a CDF callable.
    template <class Cdf>
    double measure(const Cdf& F) const {
        KahanSum s;
        for (const auto& [lo, hi] : parts) {
            const double flo = std::isinf(lo) && lo < 0 ? 0.0 : F(lo);
            s.add(F(hi) - flo);
        }
        return s.value();
    }

private:
    void check() const {
        if (parts.empty()) throw std::invalid_argument("IntervalUnion: empty");
        for (const auto& [lo, hi] : parts)
            if (!(lo < hi)) throw std::invalid_argument("IntervalUnion: need lo < hi");
    }
};

/// Plug-in parameter functional theta(.) evaluated on a weighted atom set.
class Functional {
public:
    static Functional mean() { return Functional(Kind::Mean, "mean"); }
    static Functional quantile(double p) {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("Functional::quantile: p in (0,1) required");
        Functional f(Kind::Quantile, "quantile:" + std::to_string(p));
        f.p_ = p;
        return f;
    }
    static Functional median() { return quantile(0.5); }
    static Functional std_dev() { return Functional(Kind::StdDev, "sd"); }
    static Functional prob(IntervalUnion A) {
        Functional f(Kind::Prob, "prob");
        f.set_ = std::move(A);
        return f;
    }
    static Functional mad() { return Functional(Kind::Mad, "mad"); }
    static Functional plugin(std::function<double(const WeightedAtoms&)> fn, std::string name) {
        Functional f(Kind::Plugin, std::move(name));
        f.fn_ = std::move(fn);
        return f;
    }

    double operator()(const WeightedAtoms& w) const {
        switch (kind_) {
            case Kind::Mean:
                return w.mean();
            case Kind::Quantile:
                return w.quantile(p_);
            case Kind::StdDev: {
                const double m = w.mean();
                KahanSum s;
                for (std::size_t i = 0; i < w.atoms.size(); ++i)
                    s.add(w.weights[i] * (w.atoms[i] - m) * (w.atoms[i] - m));
                return std::sqrt(std::max(0.0, s.value()));
            }
            case Kind::Prob: {
                KahanSum s;
                for (std::size_t i = 0; i < w.atoms.size(); ++i)
                    if (set_.contains(w.atoms[i])) s.add(w.weights[i]);
                return s.value();
            }
            case Kind::Mad: {
                const double med = w.quantile(0.5);
                KahanSum s;
                for (std::size_t i = 0; i < w.atoms.size(); ++i)
                    s.add(w.weights[i] * std::fabs(w.atoms[i] - med));
                return s.value();
            }
            case Kind::Plugin:
                return fn_(w);
        }
        throw std::logic_error("Functional: bad kind");
    }

    const std::string& name() const { return name_; }

private:
    enum class Kind { Mean, Quantile, StdDev, Prob, Mad, Plugin };
    Functional(Kind k, std::string n) : kind_(k), name_(std::move(n)) {}

    Kind kind_;
    std::string name_;
    double p_ = 0.5;
    IntervalUnion set_;
    std::function<double(const WeightedAtoms&)> fn_;
};

inline double eval_functional(const Functional& f, const WeightedAtoms& w) { return f(w); }

struct PosteriorCov {
    double bayes; // cov_B{F(s),F(t) | data}
    double bb;    // cov_*{F*(s),F*(t) | data}
};

/// Second-moment comparison of the exact posterior and the BB cloud:
/// both share the numerator F_{n,B}(s){1 - F_{n,B}(t)}; the denominators are
/// n+a+1 and n+a.
inline PosteriorCov posterior_cov(const MixtureCdf& mix, double s, double t) {
    if (s > t) throw std::invalid_argument("posterior_cov: require s <= t");
    const double m = mix.a() + mix.n();
    const double num = mix.cdf(s) * (1.0 - mix.cdf(t));
    return {num / (m + 1.0), num / m};
}

struct PosteriorSkew {
    double bayes; // E_B {F(t)-F_{n,B}(t)}^3 | data
    double bb;    // E_* {F*(t)-F_{n,B}(t)}^3 | data
};

inline PosteriorSkew posterior_skew(const MixtureCdf& mix, double t) {
    const double m = mix.a() + mix.n();
    const double F = mix.cdf(t);
    const double num = F * (1.0 - F) * (1.0 - 2.0 * F);
    return {2.0 * num / ((m + 1.0) * (m + 2.0)), num / (m * m)};
}

struct MeanPosteriorMoments {
    double nu0;     // E_B{ mean(F) | data }
    double tau0_sq; // Var_B{ mean(F) | data }
};

namespace detail {
// The bracket shared by the mean-variance and variance-expectation formulas:
//   (a/(n+a)) s2(F0) + (n/(n+a)) s2(F_n) + (a/(n+a))(n/(n+a)) {mean(F_n)-mean(F0)}^2
// with population variances throughout.
inline double moment_bracket(const MixtureCdf& mix) {
    const double wa = mix.prior_weight(), wn = 1.0 - wa;
    const double vn = mix.data().pop_variance();
    if (wa == 0.0) return vn;
    const auto& g = mix.prior().guess;
    if (!g.has_moments())
        throw std::runtime_error("posterior moments: prior guess '" + g.name() +
                                 "' has no usable moments");
    const double dm = mix.data().mean() - g.mean();
    return wa * g.variance() + wn * vn + wa * wn * dm * dm;
}
} // namespace detail

/// Exact posterior mean and variance of the mean functional.
inline MeanPosteriorMoments mean_posterior_moments(const MixtureCdf& mix) {
    const double wa = mix.prior_weight();
    const double xbar = mix.data().mean();
    const double nu0 = wa == 0.0 ? xbar : wa * mix.prior().guess.mean() + (1.0 - wa) * xbar;
    return {nu0, detail::moment_bracket(mix) / (mix.n() + mix.a() + 1.0)};
}

/// Exact posterior expectation of the variance functional sigma^2(F).
inline double variance_posterior_expectation(const MixtureCdf& mix) {
    const double m = mix.n() + mix.a();
    return m / (m + 1.0) * detail::moment_bracket(mix);
}

} // namespace bb
