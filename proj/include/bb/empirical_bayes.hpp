#pragma once

// Empirical-Bayes fitting of the Dirichlet prior: the moment equation for the
// strength a from the observed discrepancy D = int (F_n - F0)^2 dF0, the
// moment equations for prior-guess parameters, and the cross-validation
// construction behind the Rubin/Efron argument.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bb/cdf_model.hpp"
#include "bb/prior.hpp"
#include "bb/quadrature.hpp"
#include "bb/random.hpp"
#include "bb/special.hpp"

namespace bb {

inline constexpr double kMaxFittedA = 1e6;

struct EBFitResult {
    double a = 0.0;           // fitted strength; +infinity when D is at/below the floor
    double discrepancy = 0.0; // observed D
    double d_floor = 0.0;     // 1/(6n), the a -> infinity expectation
    bool clamped = false;     // hit 0 or kMaxFittedA
};

/// Exact D = int (F_n - F0)^2 dF0 in the F0-probability scale: with
/// u_i = F0(x_i), the integrand is piecewise quadratic and integrates in
/// closed form segment by segment.
inline double ecdf_discrepancy(const DataSample& data, const PriorGuess& guess) {
    const auto& x = data.values();
    const double n = static_cast<double>(x.size());
    std::vector<double> u(x.size() + 2);
    u.front() = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) u[i + 1] = guess.cdf(x[i]);
    u.back() = 1.0;
    KahanSum d;
    for (std::size_t k = 0; k + 1 < u.size(); ++k) {
        const double level = static_cast<double>(k) / n; // F_n on [u_k, u_{k+1})
        const double lo = level - u[k], hi = level - u[k + 1];
        d.add((lo * lo * lo - hi * hi * hi) / 3.0);
    }
    return d.value();
}

/// Invert (1/n)(1 + (n-1)/(a+1)) * (1/6) = D for a, clamped to
/// [0, kMaxFittedA]; D at or below the floor 1/(6n) maps to +infinity.
inline EBFitResult fit_a_from_discrepancy(double discrepancy, std::size_t n) {
    if (n < 2) throw std::invalid_argument("fit_a: need n >= 2");
    EBFitResult r;
    r.discrepancy = discrepancy;
    r.d_floor = 1.0 / (6.0 * static_cast<double>(n));
    if (discrepancy <= r.d_floor) {
        r.a = std::numeric_limits<double>::infinity();
        return r;
    }
    const double denom = 6.0 * static_cast<double>(n) * discrepancy - 1.0;
    double a = (static_cast<double>(n) - 1.0) / denom - 1.0;
    if (a < 0.0) {
        a = 0.0;
        r.clamped = true;
    } else if (a > kMaxFittedA) {
        a = kMaxFittedA;
        r.clamped = true;
    }
    r.a = a;
    return r;
}

/// Fit the prior strength a for a fixed continuous guess F0 by matching the
/// expected squared ecdf discrepancy.
inline EBFitResult fit_a(const DataSample& data, const PriorGuess& guess) {
    if (data.n() < 2) throw std::invalid_argument("fit_a: need n >= 2");
    if (!guess.is_continuous())
        throw std::invalid_argument("fit_a: requires a continuous prior guess");
    return fit_a_from_discrepancy(ecdf_discrepancy(data, guess), data.n());
}

/// int F0 (1 - F0) dF0 over the support, by composite quadrature in x-space
/// (equal-probability panels, 16-point Gauss-Legendre each).  Equals 1/6 for
/// every continuous guess; kept as an independently computed check.
inline double guess_self_integral(const PriorGuess& guess) {
    if (!guess.is_continuous() || !guess.has_density())
        throw std::invalid_argument("guess_self_integral: requires a continuous density");
    constexpr int panels = 64;
    constexpr double p_min = 1e-9; // tail mass below contributes < 1e-18
    const QuadRule& rule = gauss_legendre(16);
    KahanSum total;
    for (int k = 0; k < panels; ++k) {
        const double p0 = p_min + (1.0 - 2.0 * p_min) * k / panels;
        const double p1 = p_min + (1.0 - 2.0 * p_min) * (k + 1) / panels;
        const double lo = guess.inverse_cdf(p0), hi = guess.inverse_cdf(p1);
        const double h = 0.5 * (hi - lo), c = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = c + h * rule.nodes[i];
            const double F = guess.cdf(t);
            total.add(rule.weights[i] * h * F * (1.0 - F) * guess.density(t));
        }
    }
    return total.value();
}

enum class PriorFamily { normal, general };

struct FittedPrior {
    double mu0 = 0.0;
    double sigma0_sq = 0.0;
    std::optional<double> mu3_target;   // matched third central moment (n >= 3)
    bool overdetermined_warning = false; // skew equation conflicts with a symmetric family
    std::optional<PriorGuess> guess;     // populated for the normal family
};

/// Moment fit of the prior-guess parameters at a given strength a:
///   mu0 = xbar,  sigma0^2 = ((a+1)/a) s^2  (s^2 with the n-1 divisor),
/// and for n >= 3 the third-moment target
///   mu3(F0) = k3 ((a+1)/a)((a+2)/a),  k3 = n/((n-1)(n-2)) sum (x - xbar)^3.
inline FittedPrior fit_prior_params(const DataSample& data, PriorFamily family, double a) {
    if (!(a > 0.0))
        throw std::domain_error("fit_prior_params: a = 0 leaves the prior scale undefined");
    const double n = static_cast<double>(data.n());
    if (data.n() < 2) throw std::invalid_argument("fit_prior_params: need n >= 2");
    FittedPrior r;
    r.mu0 = data.mean();
    const double s_sq = data.pop_variance() * n / (n - 1.0);
    r.sigma0_sq = (a + 1.0) / a * s_sq;
    if (data.n() >= 3) {
        KahanSum cube;
        for (double x : data.values())
            cube.add((x - r.mu0) * (x - r.mu0) * (x - r.mu0));
        const double k3 = n / ((n - 1.0) * (n - 2.0)) * cube.value();
        r.mu3_target = k3 * ((a + 1.0) / a) * ((a + 2.0) / a);
        if (family == PriorFamily::normal && *r.mu3_target != 0.0)
            r.overdetermined_warning = true; // normal F0 has no free third moment
    }
    if (family == PriorFamily::normal)
        r.guess = PriorGuess::normal(r.mu0, std::sqrt(r.sigma0_sq));
    return r;
}

struct CvSplit {
    DirichletPrior prior;         // Dir(a F_a) built from the training subset
    std::vector<double> training; // the a points behind F_a
    std::vector<double> holdout;  // the remaining n-a points
    bool posterior_identity = false; // aF_a + (n-a)F_{n-a} == nF_n as multisets
};

/// Random training/test split realizing the cross-validation empirical-Bayes
/// argument: the Dir(aF_a) prior combined with the holdout has posterior
/// Dirichlet parameter exactly n F_n.
inline CvSplit cv_split(const DataSample& data, std::size_t a, RandomStream& s) {
    const std::size_t n = data.n();
    if (a < 1 || a > n - 1)
        throw std::invalid_argument("cv_split: need integer a with 1 <= a <= n-1");
    std::vector<double> pool = data.values();
    for (std::size_t i = 0; i < a; ++i) {
        const auto remaining = static_cast<double>(n - i);
        auto j = i + static_cast<std::size_t>(s.uniform() * remaining);
        if (j >= n) j = n - 1;
        std::swap(pool[i], pool[j]);
    }
    std::vector<double> training(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(a));
    std::vector<double> holdout(pool.begin() + static_cast<std::ptrdiff_t>(a), pool.end());
    std::vector<double> merged = pool;
    std::sort(merged.begin(), merged.end());
    CvSplit out{DirichletPrior(static_cast<double>(a), PriorGuess::empirical(training)),
                std::move(training), std::move(holdout), merged == data.values()};
    return out;
}

} // namespace bb
