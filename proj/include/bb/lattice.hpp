#pragma once

// Distributions on the lattice {0/m, 1/m, ..., m/m} and the midpoint-knot
// continuous interpolation used to read quantiles off jumpy CDFs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bb/special.hpp"

namespace bb {

struct LatticeDistribution {
    std::int64_t m = 0;        // support {j/m : j = 0..m}
    std::vector<double> mass;  // size m+1

    LatticeDistribution(std::int64_t m_, std::vector<double> mass_)
        : m(m_), mass(std::move(mass_)) {
        if (m < 1 || mass.size() != static_cast<std::size_t>(m) + 1)
            throw std::invalid_argument("LatticeDistribution: mass size must be m+1");
        KahanSum s;
        for (double p : mass) {
            if (!(p >= 0.0))
                throw std::invalid_argument("LatticeDistribution: negative mass");
            s.add(p);
        }
        if (std::fabs(s.value() - 1.0) > 1e-12)
            throw std::invalid_argument("LatticeDistribution: masses must sum to 1");
    }

    /// Bin(m, p)/m on the lattice.
    static LatticeDistribution binomial(std::int64_t m, double p) {
        if (m < 1)
            throw std::invalid_argument("LatticeDistribution::binomial: m must be >= 1");
        if (!(p >= 0.0) || !(p <= 1.0))
            throw std::invalid_argument("LatticeDistribution::binomial: p must lie in [0,1]");
        std::vector<double> mass(static_cast<std::size_t>(m) + 1, 0.0);
        if (p == 0.0) {
            mass.front() = 1.0;
        } else if (p == 1.0) {
            mass.back() = 1.0;
        } else {
            const double md = static_cast<double>(m);
            const double lp = std::log(p), lq = std::log1p(-p);
            for (std::int64_t k = 0; k <= m; ++k) {
                const double kd = static_cast<double>(k);
                mass[static_cast<std::size_t>(k)] =
                    std::exp(log_choose(md, kd) + kd * lp + (md - kd) * lq);
            }
            // pmf rounding leaves a ~1e-15 deficit; hand it to the mode
            KahanSum s;
            for (double q : mass) s.add(q);
            auto imax = std::max_element(mass.begin(), mass.end()) - mass.begin();
            mass[static_cast<std::size_t>(imax)] += 1.0 - s.value();
        }
        return LatticeDistribution(m, std::move(mass));
    }

    double mean() const {
        KahanSum s;
        for (std::int64_t j = 0; j <= m; ++j)
            s.add(mass[static_cast<std::size_t>(j)] * static_cast<double>(j));
        return s.value() / static_cast<double>(m);
    }
};

/// Piecewise-linear CDF through a fixed set of (x, probability) knots.
class InterpolatedCdf {
public:
    InterpolatedCdf(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size() || x_.size() < 2)
            throw std::invalid_argument("InterpolatedCdf: need matching knot vectors");
    }

    double operator()(double t) const {
        if (t <= x_.front()) return y_.front();
        if (t >= x_.back()) return y_.back();
        const auto it = std::upper_bound(x_.begin(), x_.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - x_.begin());
        const double w = (t - x_[j - 1]) / (x_[j] - x_[j - 1]);
        return y_[j - 1] + w * (y_[j] - y_[j - 1]);
    }

    /// inf{t : G(t) >= p}.
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("InterpolatedCdf::quantile: p must lie in (0,1)");
        if (p <= y_.front()) return x_.front();
        if (p > y_.back()) return x_.back();
        const auto it = std::lower_bound(y_.begin(), y_.end(), p);
        const std::size_t j = static_cast<std::size_t>(it - y_.begin());
        if (y_[j] == p) return x_[j]; // leftmost knot attaining p
        const double w = (p - y_[j - 1]) / (y_[j] - y_[j - 1]);
        return x_[j - 1] + w * (x_[j] - x_[j - 1]);
    }

    const std::vector<double>& knots_x() const { return x_; }
    const std::vector<double>& knots_y() const { return y_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Midpoint interpolation of a lattice CDF: knot value at j/m is the average
/// of the CDF steps at j/m and (j-1)/m, with boundary knots at -1/(2m) and
/// 1 + 1/(2m) carrying 0 and 1 so every p in (0,1) has a quantile.
inline InterpolatedCdf interpolated_cdf(const LatticeDistribution& dist) {
    const std::int64_t m = dist.m;
    const std::size_t n = static_cast<std::size_t>(m) + 3;
    std::vector<double> x(n), y(n);
    const double half_step = 0.5 / static_cast<double>(m);
    x[0] = -half_step;
    y[0] = 0.0;
    KahanSum cum;
    double prev_cdf = 0.0;
    for (std::int64_t j = 0; j <= m; ++j) {
        cum.add(dist.mass[static_cast<std::size_t>(j)]);
        const double cur = cum.value();
        x[static_cast<std::size_t>(j) + 1] = static_cast<double>(j) / static_cast<double>(m);
        y[static_cast<std::size_t>(j) + 1] = 0.5 * (cur + prev_cdf);
        prev_cdf = cur;
    }
    x[n - 1] = 1.0 + half_step;
    y[n - 1] = 1.0;
    return InterpolatedCdf(std::move(x), std::move(y));
}

} // namespace bb
