#pragma once

// Bayesian bias and bias+variance corrections of the BB percentile interval:
// the h-scale draw cloud is affinely repaired so its mean (and optionally SD)
// equal the exactly known posterior moments nu0 (and tau0), and the interval
// endpoints are mapped back through h^{-1}.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb/engine.hpp"
#include "bb/special.hpp"

namespace bb {

/// Closed registry of monotone transforms: identity, square (on x >= 0),
/// log (on x > 0).
class HTransform {
public:
    static HTransform identity() { return HTransform(Kind::Identity); }
    static HTransform square() { return HTransform(Kind::Square); }
    static HTransform log() { return HTransform(Kind::Log); }

    static HTransform parse(const std::string& name) {
        if (name == "identity") return identity();
        if (name == "square") return square();
        if (name == "log") return log();
        throw std::invalid_argument("unknown h transform '" + name + "'");
    }

    double h(double x) const {
        switch (kind_) {
            case Kind::Identity: return x;
            case Kind::Square:
                if (x < 0.0) throw std::domain_error("h=square: draw below 0");
                return x * x;
            case Kind::Log:
                if (!(x > 0.0)) throw std::domain_error("h=log: draw not positive");
                return std::log(x);
        }
        throw std::logic_error("HTransform: bad kind");
    }

    double h_inv(double y) const {
        switch (kind_) {
            case Kind::Identity: return y;
            case Kind::Square:
                if (y < 0.0)
                    throw std::domain_error("correction left h-scale value below range of square");
                return std::sqrt(y);
            case Kind::Log: return std::exp(y);
        }
        throw std::logic_error("HTransform: bad kind");
    }

    const char* name() const {
        switch (kind_) {
            case Kind::Identity: return "identity";
            case Kind::Square: return "square";
            case Kind::Log: return "log";
        }
        return "?";
    }

private:
    enum class Kind { Identity, Square, Log };
    explicit HTransform(Kind k) : kind_(k) {}
    Kind kind_;
};

/// Known-moment inputs of the corrections: the transform h, the exact
/// posterior mean nu0 of h(theta(F)), and optionally its exact SD tau0.
struct CorrectionSpec {
    HTransform h = HTransform::identity();
    double nu0 = 0.0;
    std::optional<double> tau0;
};

namespace detail {

inline std::vector<double> h_scale(const PosteriorDraws& draws, const HTransform& h) {
    std::vector<double> y(draws.values().size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = h.h(draws.values()[i]);
    return y;
}

} // namespace detail

/// Bias-corrected percentile interval: with eps = mean h(theta*) - nu0, the
/// endpoints are h^{-1}[h(G^{-1}(p)) - eps] for p = alpha, 1-alpha.  The
/// corrected h-scale cloud has mean nu0 by construction; eps = 0 reproduces
/// the plain percentile interval.
inline IntervalResult bias_correct(const PosteriorDraws& draws, const CorrectionSpec& spec,
                                   double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("bias_correct: alpha must lie in (0, 1/2)");
    const auto y = detail::h_scale(draws, spec.h);
    const double eps = compensated_mean(y) - spec.nu0;
    const MidpointQuantile q(draws.values());
    IntervalResult r;
    r.lower = spec.h.h_inv(spec.h.h(q(alpha)) - eps);
    r.upper = spec.h.h_inv(spec.h.h(q(1.0 - alpha)) - eps);
    r.level = 1.0 - 2.0 * alpha;
    r.estimate = spec.h.h_inv(spec.nu0);
    r.low_boot_warning = static_cast<double>(draws.boot()) * alpha < 1.0;
    return r;
}

/// Bias and variance corrected interval.  With the draw SD of h(theta*) read
/// as tau0(1+delta), endpoints are h^{-1}[(h(G^{-1}(p)) + nu0*delta - eps) /
/// (1+delta)]; the corrected h-scale cloud then has mean nu0 and SD tau0.
inline IntervalResult bias_variance_correct(const PosteriorDraws& draws,
                                            const CorrectionSpec& spec, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("bias_variance_correct: alpha must lie in (0, 1/2)");
    if (!spec.tau0)
        throw std::invalid_argument("bias_variance_correct: tau0 required");
    if (!(*spec.tau0 > 0.0))
        throw std::invalid_argument("bias_variance_correct: tau0 must be positive");
    const auto y = detail::h_scale(draws, spec.h);
    const double eps = compensated_mean(y) - spec.nu0;
    const double sd_h = std::sqrt(compensated_pop_variance(y));
    if (sd_h == 0.0)
        throw std::runtime_error("bias_variance_correct: degenerate draws (zero h-scale SD)");
    const double delta = sd_h / *spec.tau0 - 1.0;
    const double one_plus = 1.0 + delta;
    const MidpointQuantile q(draws.values());
    IntervalResult r;
    r.lower = spec.h.h_inv((spec.h.h(q(alpha)) + spec.nu0 * delta - eps) / one_plus);
    r.upper = spec.h.h_inv((spec.h.h(q(1.0 - alpha)) + spec.nu0 * delta - eps) / one_plus);
    r.level = 1.0 - 2.0 * alpha;
    r.estimate = spec.h.h_inv(spec.nu0);
    r.low_boot_warning = static_cast<double>(draws.boot()) * alpha < 1.0;
    return r;
}

} // namespace bb
