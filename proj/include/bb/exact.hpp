#pragma once

// Closed-form posteriors under Dir(aF0): the Beta law of a set probability
// F(A), its interpolated-binomial BB approximation, and the posterior of the
// median (atoms at the data points plus a between-atom density driven by
// J[alpha,gamma]).  All Gamma ratios live in log space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bb/cdf_model.hpp"
#include "bb/lattice.hpp"
#include "bb/prior.hpp"
#include "bb/quadrature.hpp"
#include "bb/special.hpp"

namespace bb {

/// Size of a BB resample: n+a, with fractional a rounded up to the n+m+1
/// draws of the fractional-weight rule.
inline std::int64_t bb_sample_size(std::size_t n, double a) {
    const double m = std::floor(a);
    return static_cast<std::int64_t>(n) + static_cast<std::int64_t>(m) + (m == a ? 0 : 1);
}

struct BetaParams {
    double alpha = 0.0;
    double beta = 0.0;
    double mean() const { return alpha / (alpha + beta); }
    double variance() const {
        const double m = alpha + beta;
        return mean() * (1.0 - mean()) / (m + 1.0);
    }
    double cdf(double x) const { return beta_cdf(x, alpha, beta); }
};

/// Exact posterior of theta = F(A):
///   Beta{ aF0(A) + #(x_i in A), a(1 - F0(A)) + #(x_i not in A) }.
inline BetaParams prob_posterior(const DirichletPrior& prior, const DataSample& data,
                                 const IntervalUnion& A) {
    const double f0a = prior.a > 0.0
                           ? A.measure([&](double t) { return prior.guess.cdf(t); })
                           : 0.0;
    std::size_t k = 0;
    for (double x : data.values())
        if (A.contains(x)) ++k;
    const auto n = data.n();
    if (prior.a == 0.0 && (k == 0 || k == n))
        throw std::domain_error(
            "prob_posterior: degenerate posterior (a = 0 and the set contains none or all data)");
    const BetaParams p{prior.a * f0a + static_cast<double>(k),
                       prior.a * (1.0 - f0a) + static_cast<double>(n - k)};
    if (!(p.alpha > 0.0) || !(p.beta > 0.0))
        throw std::domain_error("prob_posterior: degenerate posterior (zero Beta parameter)");
    return p;
}

struct BbProbApprox {
    LatticeDistribution lattice; // Bin(n+a, F_{n,B}(A)) / (n+a)
    InterpolatedCdf cdf;
    double p = 0.0; // F_{n,B}(A); also the exact mean of the lattice
};

/// The BB approximation to the F(A) posterior: the interpolated distribution
/// of Bin{n+a, F_{n,B}(A)}/(n+a).
inline BbProbApprox bb_prob_approx(const DirichletPrior& prior, const DataSample& data,
                                   const IntervalUnion& A) {
    const MixtureCdf mix(prior, data);
    const double p = A.measure([&](double t) { return mix.cdf(t); });
    const std::int64_t m = bb_sample_size(data.n(), prior.a);
    LatticeDistribution lat = LatticeDistribution::binomial(m, p);
    InterpolatedCdf cdf = interpolated_cdf(lat);
    return {std::move(lat), std::move(cdf), p};
}

/// Posterior distribution of the median: atom masses G_n{x_j} at the data
/// points and a density g_n between them.
class MedianPosterior {
public:
    MedianPosterior(std::vector<double> atoms, std::vector<double> masses, DirichletPrior prior,
                    DataSample data)
        : atoms_(std::move(atoms)), masses_(std::move(masses)), prior_(std::move(prior)),
          data_(std::move(data)) {}

    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& masses() const { return masses_; }
    double atom_mass_total() const {
        KahanSum s;
        for (double m : masses_) s.add(m);
        return s.value();
    }

    /// Between-atom density g_n(t); zero when a = 0 (atoms carry everything).
    double density(double t) const {
        const double a = prior_.a;
        if (a == 0.0) return 0.0;
        const double f0 = prior_.guess.density(t);
        if (!(f0 > 0.0)) return 0.0;
        const auto& x = data_.values();
        const auto j = static_cast<double>(
            std::lower_bound(x.begin(), x.end(), t) - x.begin()); // #{x_i < t} off the atoms
        const double n = static_cast<double>(data_.n());
        const double F0 = prior_.guess.cdf(t);
        const double alpha = a * F0 + j;
        const double gamma = a * (1.0 - F0) + n - j;
        const double lg = std::lgamma(a + n) - std::lgamma(alpha) - std::lgamma(gamma) +
                          std::log(a) + std::log(f0) + log_quad_J(alpha, gamma);
        return std::exp(lg);
    }

    /// Atom masses plus the integrated density (trapezoid, `per_gap` cells
    /// per segment including the two prior-guess tails); equals 1 up to
    /// quadrature error.
    double total_mass(int per_gap = 200) const {
        KahanSum total;
        total.add(atom_mass_total());
        if (prior_.a == 0.0) return total.value();
        const auto& x = data_.values();
        std::vector<double> bounds;
        bounds.push_back(std::min(prior_.guess.inverse_cdf(1e-9), x.front()));
        bounds.insert(bounds.end(), x.begin(), x.end());
        bounds.push_back(std::max(prior_.guess.inverse_cdf(1.0 - 1e-9), x.back()));
        for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
            const double lo = bounds[seg], hi = bounds[seg + 1];
            if (!(hi > lo)) continue;
            const double nudge = (hi - lo) * 1e-9; // keep nodes off the atoms
            const double a0 = lo + nudge, b0 = hi - nudge;
            const double h = (b0 - a0) / per_gap;
            KahanSum seg_sum;
            seg_sum.add(0.5 * (density(a0) + density(b0)));
            for (int i = 1; i < per_gap; ++i) seg_sum.add(density(a0 + h * i));
            total.add(seg_sum.value() * h);
        }
        return total.value();
    }

private:
    std::vector<double> atoms_;
    std::vector<double> masses_;
    DirichletPrior prior_;
    DataSample data_;
};

/// Exact posterior of the median.  Atom masses use the Gamma-ratio formula
///   G_n{x_j} = Gamma(a+n) / [Gamma(aF0(x_j)+j) Gamma(a{1-F0(x_j)}+n-j+1)]
///              * (1/2)^{a+n-1};
/// at a = 0 these reduce to C(n-1, j-1) (1/2)^{n-1} and the density vanishes.
/// Tied data points are rejected.
inline MedianPosterior median_posterior(const DirichletPrior& prior, const DataSample& data) {
    const auto& x = data.values();
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (x[i] == x[i + 1])
            throw std::invalid_argument("median_posterior: tied data points are unsupported");
    if (prior.a > 0.0 && !prior.guess.has_density())
        throw std::invalid_argument(
            "median_posterior: a > 0 requires a prior guess with a continuous density");
    const double a = prior.a;
    const double n = static_cast<double>(data.n());
    std::vector<double> masses(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double j = static_cast<double>(i + 1);
        const double F0 = a > 0.0 ? prior.guess.cdf(x[i]) : 0.0;
        const double lg = std::lgamma(a + n) - std::lgamma(a * F0 + j) -
                          std::lgamma(a * (1.0 - F0) + n - j + 1.0) -
                          (a + n - 1.0) * M_LN2;
        masses[i] = std::exp(lg);
    }
    return MedianPosterior(x, std::move(masses), prior, data);
}

/// BB approximation to the median posterior CDF:
///   G_hat(t) = Pr[ Bin{n+a, F_{n,B}(t)} >= ceil((n+a)/2) ].
/// Odd n+a follows the paper's 2m+1 case; even sizes use the lower-middle
/// order statistic, matching the inf-definition of the sample median.
inline double bb_median_cdf(const DirichletPrior& prior, const DataSample& data, double t) {
    const MixtureCdf mix(prior, data);
    const std::int64_t m = bb_sample_size(data.n(), prior.a);
    const std::int64_t k = (m + 1) / 2;
    return binomial_upper_tail(m, k, mix.cdf(t));
}

} // namespace bb
