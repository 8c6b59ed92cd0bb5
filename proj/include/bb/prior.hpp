#pragma once

// Prior-guess distributions F0 and the Dirichlet-process prior Dir(a F0).
//
// Sampling from a guess always goes through inverse_cdf(uniform) so that a
// monotone transform of the guess, coupled on the same stream, transforms the
// draws pointwise.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb/random.hpp"
#include "bb/special.hpp"

namespace bb {

namespace detail {

struct GuessModel {
    virtual ~GuessModel() = default;
    virtual double cdf(double t) const = 0;
    virtual double inverse_cdf(double p) const = 0; // inf{t : F(t) >= p}
    virtual double density(double t) const {
        (void)t;
        throw std::runtime_error("prior guess '" + name() + "' has no density");
    }
    virtual bool has_density() const { return false; }
    virtual bool is_continuous() const = 0;
    virtual bool has_moments() const { return false; }
    virtual double mean() const { throw std::runtime_error("prior guess has no moments"); }
    virtual double variance() const { throw std::runtime_error("prior guess has no moments"); }
    virtual double third_central_moment() const {
        throw std::runtime_error("prior guess has no moments");
    }
    virtual std::string name() const = 0;
};

struct NormalGuess final : GuessModel {
    double mu, sigma;
    NormalGuess(double m, double s) : mu(m), sigma(s) {
        if (!(sigma > 0.0)) throw std::invalid_argument("normal prior: sigma must be positive");
    }
    double cdf(double t) const override { return normal_cdf((t - mu) / sigma); }
    double inverse_cdf(double p) const override { return mu + sigma * normal_quantile(p); }
    double density(double t) const override { return normal_pdf((t - mu) / sigma) / sigma; }
    bool has_density() const override { return true; }
    bool is_continuous() const override { return true; }
    bool has_moments() const override { return true; }
    double mean() const override { return mu; }
    double variance() const override { return sigma * sigma; }
    double third_central_moment() const override { return 0.0; }
    std::string name() const override {
        return "normal:" + std::to_string(mu) + "," + std::to_string(sigma);
    }
};

struct UniformGuess final : GuessModel {
    double lo, hi;
    UniformGuess(double l, double h) : lo(l), hi(h) {
        if (!(hi > lo)) throw std::invalid_argument("uniform prior: need L < U");
    }
    double cdf(double t) const override {
        if (t <= lo) return 0.0;
        if (t >= hi) return 1.0;
        return (t - lo) / (hi - lo);
    }
    double inverse_cdf(double p) const override { return lo + p * (hi - lo); }
    double density(double t) const override {
        return (t >= lo && t <= hi) ? 1.0 / (hi - lo) : 0.0;
    }
    bool has_density() const override { return true; }
    bool is_continuous() const override { return true; }
    bool has_moments() const override { return true; }
    double mean() const override { return 0.5 * (lo + hi); }
    double variance() const override { return (hi - lo) * (hi - lo) / 12.0; }
    double third_central_moment() const override { return 0.0; }
    std::string name() const override {
        return "uniform:" + std::to_string(lo) + "," + std::to_string(hi);
    }
};

struct ExponentialGuess final : GuessModel {
    double rate;
    explicit ExponentialGuess(double r) : rate(r) {
        if (!(rate > 0.0)) throw std::invalid_argument("exp prior: rate must be positive");
    }
    double cdf(double t) const override { return t <= 0.0 ? 0.0 : -std::expm1(-rate * t); }
    double inverse_cdf(double p) const override { return -std::log1p(-p) / rate; }
    double density(double t) const override { return t < 0.0 ? 0.0 : rate * std::exp(-rate * t); }
    bool has_density() const override { return true; }
    bool is_continuous() const override { return true; }
    bool has_moments() const override { return true; }
    double mean() const override { return 1.0 / rate; }
    double variance() const override { return 1.0 / (rate * rate); }
    double third_central_moment() const override { return 2.0 / (rate * rate * rate); }
    std::string name() const override { return "exp:" + std::to_string(rate); }
};

// Step CDF through a finite set of values; the inf-definition quantile.
struct EmpiricalGuess final : GuessModel {
    std::vector<double> values; // sorted
    explicit EmpiricalGuess(std::vector<double> v) : values(std::move(v)) {
        if (values.empty()) throw std::invalid_argument("empirical prior: no values");
        std::sort(values.begin(), values.end());
        for (double x : values)
            if (!std::isfinite(x))
                throw std::invalid_argument("empirical prior: non-finite value");
    }
    double cdf(double t) const override {
        const auto it = std::upper_bound(values.begin(), values.end(), t);
        return static_cast<double>(it - values.begin()) / static_cast<double>(values.size());
    }
    double inverse_cdf(double p) const override {
        const double n = static_cast<double>(values.size());
        auto k = static_cast<std::size_t>(std::ceil(p * n));
        if (k < 1) k = 1;
        if (k > values.size()) k = values.size();
        return values[k - 1];
    }
    bool is_continuous() const override { return false; }
    bool has_moments() const override { return true; }
    double mean() const override { return compensated_mean(values); }
    double variance() const override { return compensated_pop_variance(values); }
    double third_central_moment() const override {
        const double m = mean();
        KahanSum s;
        for (double x : values) s.add((x - m) * (x - m) * (x - m));
        return s.value() / static_cast<double>(values.size());
    }
    std::string name() const override {
        return "empirical[" + std::to_string(values.size()) + "]";
    }
};

// Pushforward of a base guess under a strictly increasing map g; realizes the
// inverse-CDF coupling g(F0^{-1}(u)) used by the transformation-invariance
// checks.  Moments and density are not derived.
struct TransformedGuess final : GuessModel {
    std::shared_ptr<const GuessModel> base;
    std::function<double(double)> g, g_inv;
    std::string label;
    TransformedGuess(std::shared_ptr<const GuessModel> b, std::function<double(double)> fwd,
                     std::function<double(double)> inv, std::string lbl)
        : base(std::move(b)), g(std::move(fwd)), g_inv(std::move(inv)), label(std::move(lbl)) {}
    double cdf(double t) const override { return base->cdf(g_inv(t)); }
    double inverse_cdf(double p) const override { return g(base->inverse_cdf(p)); }
    bool is_continuous() const override { return base->is_continuous(); }
    std::string name() const override { return label; }
};

} // namespace detail

/// Parametric (or empirical-file) prior guess CDF F0.
class PriorGuess {
public:
    static PriorGuess normal(double mu, double sigma) {
        return PriorGuess(std::make_shared<detail::NormalGuess>(mu, sigma));
    }
    static PriorGuess uniform(double lo, double hi) {
        return PriorGuess(std::make_shared<detail::UniformGuess>(lo, hi));
    }
    static PriorGuess exponential(double rate) {
        return PriorGuess(std::make_shared<detail::ExponentialGuess>(rate));
    }
    static PriorGuess empirical(std::vector<double> values) {
        return PriorGuess(std::make_shared<detail::EmpiricalGuess>(std::move(values)));
    }
    static PriorGuess empirical_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open prior file: " + path);
        std::vector<double> v;
        double x;
        while (in >> x) v.push_back(x);
        return empirical(std::move(v));
    }
    static PriorGuess transformed(const PriorGuess& base, std::function<double(double)> g,
                                  std::function<double(double)> g_inv, std::string label) {
        return PriorGuess(std::make_shared<detail::TransformedGuess>(
            base.impl_, std::move(g), std::move(g_inv), std::move(label)));
    }

    double cdf(double t) const { return impl_->cdf(t); }
    double inverse_cdf(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("inverse_cdf: p must lie in (0,1)");
        return impl_->inverse_cdf(p);
    }
    double density(double t) const { return impl_->density(t); }
    bool has_density() const { return impl_->has_density(); }
    bool is_continuous() const { return impl_->is_continuous(); }
    bool has_moments() const { return impl_->has_moments(); }
    double mean() const { return impl_->mean(); }
    double variance() const { return impl_->variance(); }
    double third_central_moment() const { return impl_->third_central_moment(); }
    std::string name() const { return impl_->name(); }

    /// Inverse-CDF draw; consumes exactly one uniform.
    double sample(RandomStream& s) const { return impl_->inverse_cdf(s.uniform()); }

private:
    explicit PriorGuess(std::shared_ptr<const detail::GuessModel> impl)
        : impl_(std::move(impl)) {}
    std::shared_ptr<const detail::GuessModel> impl_;
};

/// Prior spec grammar: `normal:MU,SIGMA` | `uniform:L,U` | `exp:RATE` |
/// `empirical:PATH`.
inline PriorGuess parse_prior_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("prior spec '" + spec + "': expected family:args");
    const std::string family = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    auto split2 = [&](double& a, double& b) {
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("prior spec '" + spec + "': expected two arguments");
        std::size_t pos = 0;
        a = std::stod(args.substr(0, comma), &pos);
        b = std::stod(args.substr(comma + 1));
    };
    if (family == "normal") {
        double mu, sigma;
        split2(mu, sigma);
        return PriorGuess::normal(mu, sigma);
    }
    if (family == "uniform") {
        double lo, hi;
        split2(lo, hi);
        return PriorGuess::uniform(lo, hi);
    }
    if (family == "exp") return PriorGuess::exponential(std::stod(args));
    if (family == "empirical") return PriorGuess::empirical_file(args);
    throw std::invalid_argument("prior spec '" + spec + "': unknown family '" + family + "'");
}

/// Dir(a F0): prior strength a (prior sample size, possibly fractional;
/// a = 0 is the noninformative limit) plus the guess F0.
struct DirichletPrior {
    double a = 0.0;
    PriorGuess guess;

    DirichletPrior(double a_, PriorGuess guess_) : a(a_), guess(std::move(guess_)) {
        if (!(a >= 0.0)) throw std::invalid_argument("DirichletPrior: a must be >= 0");
    }
};

} // namespace bb
