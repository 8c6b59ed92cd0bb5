#pragma once

// Counter-based random streams (Threefry-2x64, 20 rounds) and the variate
// kernels the resampling engines consume.
//
// A stream is identified by (seed, path of child indices); the generator state
// is a pure function of that identity, so replicate k of a simulation can use
// child(k) and produce the same numbers on any worker, in any order.
// Continuous kernels draw by inverse-CDF wherever an inverse is available,
// which keeps monotone-transform couplings exact.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb/special.hpp"

namespace bb {

namespace detail {

inline constexpr std::uint64_t rotl64(std::uint64_t x, unsigned r) {
    return (x << r) | (x >> (64u - r));
}

// Threefry-2x64-20 (Salmon et al. 2011).
inline void threefry2x64(std::uint64_t k0, std::uint64_t k1,
                         std::uint64_t c0, std::uint64_t c1,
                         std::uint64_t& out0, std::uint64_t& out1) {
    constexpr unsigned rot[8] = {16, 42, 12, 31, 16, 32, 24, 21};
    const std::uint64_t ks[3] = {k0, k1, 0x1BD11BDAA9FC1A22ull ^ k0 ^ k1};
    std::uint64_t x0 = c0 + ks[0];
    std::uint64_t x1 = c1 + ks[1];
    for (unsigned r = 0; r < 20; ++r) {
        x0 += x1;
        x1 = rotl64(x1, rot[r % 8]);
        x1 ^= x0;
        if ((r & 3u) == 3u) {
            const std::uint64_t s = r / 4 + 1;
            x0 += ks[s % 3];
            x1 += ks[(s + 1) % 3] + s;
        }
    }
    out0 = x0;
    out1 = x1;
}

} // namespace detail

/// Seedable, splittable random stream.  Copyable value type; never share one
/// instance across threads, hand each worker its own child instead.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed)
        : key0_(seed), key1_(0x9E3779B97F4A7C15ull) {}

    /// Derive the child stream at `index`.  Children at distinct indices are
    /// independent; the derivation is deterministic in (seed, path, index).
    RandomStream child(std::uint64_t index) const {
        std::uint64_t k0, k1;
        detail::threefry2x64(key0_, key1_, index, kChildDomain, k0, k1);
        return RandomStream(k0, k1);
    }

    std::uint64_t next_u64() {
        if (buf_pos_ == 2) {
            detail::threefry2x64(key0_, key1_, counter_++, kDrawDomain, buf_[0], buf_[1]);
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    /// Uniform draw on the open interval (0,1), 53-bit resolution.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    RandomStream(std::uint64_t k0, std::uint64_t k1) : key0_(k0), key1_(k1) {}

    static constexpr std::uint64_t kDrawDomain = 0;
    static constexpr std::uint64_t kChildDomain = 0x8000000000000000ull;

    std::uint64_t key0_;
    std::uint64_t key1_;
    std::uint64_t counter_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    unsigned buf_pos_ = 2;
};

inline double sample_exponential(RandomStream& s) {
    return -std::log1p(-s.uniform()); // inverse CDF, one uniform
}

inline double sample_normal(RandomStream& s) {
    return normal_quantile(s.uniform()); // inversion, one uniform
}

/// Gamma(shape, 1).  Marsaglia-Tsang squeeze for shape >= 1 (two uniforms per
/// attempt, acceptance > 95%); shapes below one are boosted through
/// Gamma(shape+1) * U^{1/shape}.
inline double sample_gamma(double shape, RandomStream& s) {
    if (!(shape > 0.0))
        throw std::invalid_argument("sample_gamma: shape must be positive");
    if (shape < 1.0) {
        const double u = s.uniform();
        return sample_gamma(shape + 1.0, s) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double z = sample_normal(s);
        double v = 1.0 + c * z;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = s.uniform();
        if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
}

/// Beta(alpha, beta).  Inversion when one parameter equals 1 (one uniform);
/// otherwise the two-Gamma ratio.
inline double sample_beta(double alpha, double beta, RandomStream& s) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("sample_beta: parameters must be positive");
    if (alpha == 1.0)
        return -std::expm1(std::log1p(-s.uniform()) / beta); // 1-(1-u)^{1/beta}
    if (beta == 1.0)
        return std::exp(std::log(s.uniform()) / alpha); // u^{1/alpha}
    const double g1 = sample_gamma(alpha, s);
    const double g2 = sample_gamma(beta, s);
    if (g1 == 0.0 && g2 == 0.0) return 0.5; // both underflowed, tiny shapes
    return g1 / (g1 + g2);
}

/// Dirichlet(params) weight vector: normalized Gamma draws, unit exponentials
/// when a parameter equals one.  Weights are non-negative and sum to one up to
/// a final compensated fix-up (residual below ~1e-15).
inline std::vector<double> sample_dirichlet(std::span<const double> params, RandomStream& s) {
    if (params.empty())
        throw std::invalid_argument("sample_dirichlet: empty parameter vector");
    std::vector<double> w(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(params[i] > 0.0))
            throw std::invalid_argument("sample_dirichlet: parameters must be positive");
        w[i] = (params[i] == 1.0) ? sample_exponential(s) : sample_gamma(params[i], s);
    }
    KahanSum total;
    for (double x : w) total.add(x);
    const double t = total.value();
    if (t <= 0.0) { // all draws underflowed; fall back to the symmetric point
        for (double& x : w) x = 1.0 / static_cast<double>(w.size());
        return w;
    }
    std::size_t imax = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] /= t;
        if (w[i] > w[imax]) imax = i;
    }
    KahanSum check;
    for (double x : w) check.add(x);
    w[imax] += 1.0 - check.value();
    return w;
}

/// Binomial(m, p) count by inversion of a mode-centered enumeration of the
/// pmf.  Consumes exactly one uniform; expected work O(sd(m,p)).
inline std::int64_t sample_binomial(std::int64_t m, double p, RandomStream& s) {
    if (m < 0)
        throw std::invalid_argument("sample_binomial: m must be non-negative");
    if (!(p >= 0.0) || !(p <= 1.0))
        throw std::invalid_argument("sample_binomial: p must lie in [0,1]");
    const double u = s.uniform();
    if (m == 0 || p == 0.0) return 0;
    if (p == 1.0) return m;

    const double md = static_cast<double>(m);
    std::int64_t mode = static_cast<std::int64_t>(std::floor((md + 1.0) * p));
    if (mode > m) mode = m;
    const double logp = std::log(p), logq = std::log1p(-p);
    const double pm = std::exp(log_choose(md, static_cast<double>(mode)) +
                               static_cast<double>(mode) * logp +
                               static_cast<double>(m - mode) * logq);
    double cum = pm;
    if (u <= cum) return mode;
    std::int64_t lo = mode, hi = mode, last = mode;
    double plo = pm, phi = pm;
    const double ratio = p / (1.0 - p);
    while (lo > 0 || hi < m) {
        if (hi < m) {
            phi *= static_cast<double>(m - hi) / static_cast<double>(hi + 1) * ratio;
            ++hi;
            cum += phi;
            last = hi;
            if (u <= cum) return hi;
        }
        if (lo > 0) {
            plo *= static_cast<double>(lo) / static_cast<double>(m - lo + 1) / ratio;
            --lo;
            cum += plo;
            last = lo;
            if (u <= cum) return lo;
        }
    }
    return last; // u fell in the rounding slack beyond the accumulated mass
}

} // namespace bb
