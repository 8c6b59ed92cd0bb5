#pragma once

// Censored-data estimators and bootstrap schemes on the cumulative-hazard
// scale: Nelson-Aalen and Kaplan-Meier, Gill's weird bootstrap, Beta-process
// posteriors, the weird Bayesian bootstrap, and the censored resampling BB.
//
// Hazard jumps that arise as integer relative frequencies (dN/Y, binomial
// counts over risk sets) are carried as exact fractions; the product-integral
// CDF then reproduces values like the empirical CDF bit-exactly in the
// uncensored case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bb/engine.hpp"
#include "bb/prior.hpp"
#include "bb/random.hpp"
#include "bb/special.hpp"

namespace bb {

/// Right-censored observations (X_i, delta_i) with the derived counting
/// processes: N_n(t) events in [0,t] and Y_n(t) at risk just before t.
/// Ties are handled with events processed strictly before censorings.
class SurvivalData {
public:
    SurvivalData() = default; // empty sample (prior-only posterior)

    SurvivalData(std::vector<double> times, std::vector<int> events) {
        if (times.size() != events.size())
            throw std::invalid_argument("SurvivalData: time/event size mismatch");
        for (double t : times)
            if (!std::isfinite(t) || t < 0.0)
                throw std::invalid_argument("SurvivalData: times must be finite and >= 0");
        sorted_times_ = times;
        std::sort(sorted_times_.begin(), sorted_times_.end());
        std::vector<std::size_t> order(times.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
        for (std::size_t idx : order) {
            const double t = times[idx];
            if (unique_times_.empty() || unique_times_.back() != t) {
                unique_times_.push_back(t);
                d_.push_back(0);
                c_.push_back(0);
            }
            (events[idx] ? d_.back() : c_.back()) += 1;
        }
        risk_.resize(unique_times_.size());
        std::int64_t at_risk = 0;
        for (std::size_t i = unique_times_.size(); i-- > 0;) {
            at_risk += d_[i] + c_[i];
            risk_[i] = at_risk;
        }
    }

    std::size_t n() const { return sorted_times_.size(); }
    const std::vector<double>& unique_times() const { return unique_times_; }
    std::int64_t events_at(std::size_t i) const { return d_[i]; }
    std::int64_t censored_at(std::size_t i) const { return c_[i]; }
    std::int64_t at_risk(std::size_t i) const { return risk_[i]; }
    std::int64_t total_events() const {
        std::int64_t s = 0;
        for (auto d : d_) s += d;
        return s;
    }
    double max_time() const {
        return sorted_times_.empty() ? 0.0 : sorted_times_.back();
    }

    /// Y_n(t) = #{X_i >= t}.
    std::int64_t y_at(double t) const {
        const auto it = std::lower_bound(sorted_times_.begin(), sorted_times_.end(), t);
        return static_cast<std::int64_t>(sorted_times_.end() - it);
    }

private:
    std::vector<double> sorted_times_;
    std::vector<double> unique_times_;
    std::vector<std::int64_t> d_, c_, risk_;
};

/// Piecewise-constant cumulative hazard: ordered jump times with jump sizes
/// in [0,1].  Jumps known as integer fractions num/den keep that form, and
/// the product-integral CDF stays in exact integer arithmetic as long as the
/// running survival fraction fits; entries at equal times compose in
/// insertion order.
class HazardPath {
public:
    void add(double t, double jump) { push(t, jump, 0, 0); }
    void add_exact(double t, std::uint64_t num, std::uint64_t den) {
        if (den == 0 || num > den)
            throw std::invalid_argument("HazardPath: bad exact jump");
        push(t, static_cast<double>(num) / static_cast<double>(den), num, den);
    }

    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& jumps() const { return jumps_; }

    /// A(t): sum of jumps at times <= t.
    double cumhaz(double t) const {
        KahanSum s;
        for (std::size_t i = 0; i < times_.size() && times_[i] <= t; ++i) s.add(jumps_[i]);
        return s.value();
    }

    /// F(t) = 1 - prod_{s <= t} {1 - dA(s)} through the product integral.
    double cdf(double t) const {
        Survival s;
        for (std::size_t i = 0; i < times_.size() && times_[i] <= t; ++i) step(s, i);
        return s.cdf();
    }

    /// F immediately after each recorded jump.
    std::vector<double> cdf_at_jumps() const {
        std::vector<double> out(times_.size());
        Survival s;
        for (std::size_t i = 0; i < times_.size(); ++i) {
            step(s, i);
            out[i] = s.cdf();
        }
        return out;
    }

    /// inf{t : F(t) >= 1/2}; +infinity when the path never reaches it.
    double median_survival() const {
        Survival s;
        std::size_t i = 0;
        while (i < times_.size()) {
            std::size_t j = i;
            while (j < times_.size() && times_[j] == times_[i]) step(s, j++);
            if (s.cdf() >= 0.5) return times_[i];
            i = j;
        }
        return std::numeric_limits<double>::infinity();
    }

private:
    // Running survival prod(1 - jump), kept as an exact fraction while the
    // reduced numerator and denominator stay below 2^53.
    struct Survival {
        std::uint64_t num = 1, den = 1;
        bool exact = true;
        double value = 1.0;
        double cdf() const {
            return exact ? static_cast<double>(den - num) / static_cast<double>(den)
                         : 1.0 - value;
        }
    };

    void step(Survival& s, std::size_t i) const {
        static constexpr std::uint64_t limit = 1ull << 53;
        if (s.exact && den_[i] != 0) {
            const std::uint64_t fn = den_[i] - num_[i];
            if (fn == 0) {
                s.num = 0;
                s.den = 1;
                return;
            }
            if (s.num <= limit / fn && s.den <= limit / den_[i]) {
                std::uint64_t nn = s.num * fn;
                std::uint64_t nd = s.den * den_[i];
                const std::uint64_t g = std::gcd(nn, nd);
                s.num = nn / g;
                s.den = nd / g;
                if (s.num <= limit && s.den <= limit) return;
            }
        }
        if (s.exact) {
            s.value = static_cast<double>(s.num) / static_cast<double>(s.den);
            s.exact = false;
        }
        s.value *= 1.0 - jumps_[i];
    }

    void push(double t, double jump, std::uint64_t num, std::uint64_t den) {
        if (!(jump >= 0.0 && jump <= 1.0))
            throw std::invalid_argument("HazardPath: jump outside [0,1]");
        if (!times_.empty() && t < times_.back())
            throw std::invalid_argument("HazardPath: jump times must be nondecreasing");
        times_.push_back(t);
        jumps_.push_back(jump);
        num_.push_back(num);
        den_.push_back(den);
    }

    std::vector<double> times_, jumps_;
    std::vector<std::uint64_t> num_, den_;
};

/// Nelson-Aalen estimator: jumps dN_n(x)/Y_n(x) at the observed event times.
inline HazardPath nelson_aalen(const SurvivalData& data) {
    HazardPath path;
    for (std::size_t i = 0; i < data.unique_times().size(); ++i) {
        const auto d = data.events_at(i);
        if (d > 0)
            path.add_exact(data.unique_times()[i], static_cast<std::uint64_t>(d),
                           static_cast<std::uint64_t>(data.at_risk(i)));
    }
    return path;
}

/// Right-continuous step CDF.
struct StepCdf {
    std::vector<double> x;
    std::vector<double> y;
    double operator()(double t) const {
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        if (it == x.begin()) return 0.0;
        return y[static_cast<std::size_t>(it - x.begin()) - 1];
    }
};

/// Kaplan-Meier CDF: the product integral of the Nelson-Aalen path.  With no
/// censoring this is the empirical CDF, bit for bit.
inline StepCdf kaplan_meier(const SurvivalData& data) {
    const HazardPath na = nelson_aalen(data);
    return {na.times(), na.cdf_at_jumps()};
}

/// Kaplan-Meier estimate of the censoring distribution H: censorings are the
/// events, with at-risk sets shrunk by the deaths at the same time (events
/// precede censorings at ties).
inline StepCdf censoring_kaplan_meier(const SurvivalData& data) {
    HazardPath path;
    for (std::size_t i = 0; i < data.unique_times().size(); ++i) {
        const auto c = data.censored_at(i);
        if (c > 0)
            path.add_exact(data.unique_times()[i], static_cast<std::uint64_t>(c),
                           static_cast<std::uint64_t>(data.at_risk(i) - data.events_at(i)));
    }
    return {path.times(), path.cdf_at_jumps()};
}

/// Gill's weird bootstrap: independent binomial relative-frequency jumps
/// dA*(x) = Bin{Y_n(x), dA_n(x)}/Y_n(x) at the observed event times.
inline HazardPath weird_bootstrap_draw(const SurvivalData& data, RandomStream& s) {
    if (data.total_events() == 0)
        throw std::invalid_argument("weird_bootstrap_draw: no observed events");
    HazardPath path;
    for (std::size_t i = 0; i < data.unique_times().size(); ++i) {
        const auto d = data.events_at(i);
        if (d == 0) continue;
        const auto y = data.at_risk(i);
        const double p = static_cast<double>(d) / static_cast<double>(y);
        const std::int64_t k = sample_binomial(y, p, s);
        if (k > 0)
            path.add_exact(data.unique_times()[i], static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(y));
    }
    return path;
}

/// Beta-process prior for the cumulative hazard: concentration c(.) (constant
/// or the Dirichlet link c(s) = a F0[s, infinity)) around the prior-guess
/// hazard A0 = -log(1 - F0) of a parametric lifetime guess.
class BetaProcessPrior {
public:
    static BetaProcessPrior constant(double c0, PriorGuess guess, int grid_per_gap = 20) {
        if (!(c0 >= 0.0))
            throw std::invalid_argument("BetaProcessPrior: c must be >= 0");
        return BetaProcessPrior(false, c0, std::move(guess), grid_per_gap);
    }
    static BetaProcessPrior dirichlet_link(double a, PriorGuess guess, int grid_per_gap = 20) {
        if (!(a >= 0.0))
            throw std::invalid_argument("BetaProcessPrior: a must be >= 0");
        return BetaProcessPrior(true, a, std::move(guess), grid_per_gap);
    }

    bool is_dirichlet_link() const { return dirichlet_; }
    /// Prior strength; for the Dirichlet link this is max c(.), the paper's
    /// suggested reading of a.
    double a() const { return level_; }
    int grid_per_gap() const { return grid_per_gap_; }
    const PriorGuess& guess() const { return guess_; }

    double c_at(double s) const {
        return dirichlet_ ? level_ * (1.0 - guess_.cdf(s)) : level_;
    }
    double prior_cumhaz(double t) const {
        const double f = std::min(guess_.cdf(t), 1.0 - 1e-12);
        return -std::log1p(-f);
    }

private:
    BetaProcessPrior(bool link, double level, PriorGuess guess, int grid_per_gap)
        : dirichlet_(link), level_(level), guess_(std::move(guess)),
          grid_per_gap_(grid_per_gap) {
        if (grid_per_gap_ < 1)
            throw std::invalid_argument("BetaProcessPrior: grid resolution must be >= 1");
    }
    bool dirichlet_;
    double level_;
    PriorGuess guess_;
    int grid_per_gap_;
};

/// One node of the discretized posterior Beta process: either a grid cell
/// carrying the continuous prior increment or an observed event time.
struct BetaPosteriorNode {
    double time = 0.0;      // right edge of the cell, or the event time
    bool is_event = false;
    double c = 0.0;         // concentration at the node
    double c_plus_y = 0.0;
    double da0 = 0.0;       // prior-guess increment over the cell (0 at events)
    std::int64_t dn = 0;    // events at the node
    std::int64_t y = 0;     // at risk
    double mean_jump = 0.0; // dA_{n,B} = (c dA0 + dN)/(c + Y)
};

/// Discretized posterior of the Beta process: parameters c + Y_n and the
/// Bayes-estimate hazard A_{n,B} on the cell/event node sequence.
struct BetaPosterior {
    std::vector<BetaPosteriorNode> nodes; // time-ordered; cells precede events at equal times
    bool truncated = false;               // c = 0 beyond the data: nothing identifies A there

    HazardPath mean_path() const {
        HazardPath path;
        for (const auto& nd : nodes) {
            if (nd.mean_jump <= 0.0) continue;
            if (nd.is_event && nd.c == 0.0)
                path.add_exact(nd.time, static_cast<std::uint64_t>(nd.dn),
                               static_cast<std::uint64_t>(nd.y));
            else
                path.add(nd.time, nd.mean_jump);
        }
        return path;
    }
};

/// Discretize the posterior Beta process over [0, horizon]: event times keep
/// their atoms dN/(c+Y); each inter-event gap is split into grid_per_gap
/// cells carrying c dA0 with c and Y evaluated at the cell midpoint.
/// With c = 0 this is the Nelson-Aalen path exactly; with no data it is A0.
inline BetaPosterior beta_posterior_params(const BetaProcessPrior& prior,
                                           const SurvivalData& data,
                                           std::optional<double> horizon = std::nullopt) {
    double end = horizon.value_or(
        data.n() > 0 ? data.max_time()
                     : prior.guess().inverse_cdf(0.95)); // prior-only: cover the bulk of F0
    BetaPosterior out;
    std::vector<double> bounds{0.0};
    for (std::size_t i = 0; i < data.unique_times().size(); ++i)
        if (data.events_at(i) > 0 && data.unique_times()[i] <= end)
            bounds.push_back(data.unique_times()[i]);
    if (bounds.back() < end) bounds.push_back(end);

    for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
        const double lo = bounds[seg], hi = bounds[seg + 1];
        if (hi > lo) {
            const int cells = prior.grid_per_gap();
            for (int k = 0; k < cells; ++k) {
                const double u = lo + (hi - lo) * k / cells;
                const double v = lo + (hi - lo) * (k + 1) / cells;
                const double mid = 0.5 * (u + v);
                BetaPosteriorNode nd;
                nd.time = v;
                nd.c = prior.c_at(mid);
                nd.y = data.y_at(mid);
                nd.c_plus_y = nd.c + static_cast<double>(nd.y);
                nd.da0 = std::min(prior.prior_cumhaz(v) - prior.prior_cumhaz(u), 1.0 - 1e-9);
                if (nd.c_plus_y > 0.0) {
                    nd.mean_jump = nd.c * nd.da0 / nd.c_plus_y;
                } else {
                    out.truncated = true; // c = 0 beyond the last observation
                    nd.mean_jump = 0.0;
                }
                out.nodes.push_back(nd);
            }
        }
        // event atom at the segment's right boundary
        for (std::size_t i = 0; i < data.unique_times().size(); ++i) {
            if (data.unique_times()[i] != hi || data.events_at(i) == 0) continue;
            BetaPosteriorNode nd;
            nd.time = hi;
            nd.is_event = true;
            nd.dn = data.events_at(i);
            nd.y = data.at_risk(i);
            nd.c = prior.c_at(hi);
            nd.c_plus_y = nd.c + static_cast<double>(nd.y);
            nd.mean_jump = static_cast<double>(nd.dn) / nd.c_plus_y;
            out.nodes.push_back(nd);
        }
    }
    return out;
}

/// One posterior draw of the hazard: independent Beta increments
/// Beta{c dA0 + dN, c(1 - dA0) + Y - dN} across the node sequence.
inline HazardPath beta_posterior_draw(const BetaPosterior& post, RandomStream& s) {
    HazardPath path;
    for (const auto& nd : post.nodes) {
        const double alpha = nd.c * nd.da0 + static_cast<double>(nd.dn);
        if (alpha <= 0.0) continue;
        const double beta = nd.c * (1.0 - nd.da0) + static_cast<double>(nd.y - nd.dn);
        if (beta <= 0.0) {
            path.add(nd.time, 1.0); // all posterior mass at a unit jump
            continue;
        }
        path.add(nd.time, sample_beta(alpha, beta, s));
    }
    return path;
}

inline HazardPath beta_posterior_draw(const BetaProcessPrior& prior, const SurvivalData& data,
                                      RandomStream& s) {
    return beta_posterior_draw(beta_posterior_params(prior, data), s);
}

/// Weird Bayesian bootstrap: binomial relative-frequency increments
/// dA* = Bin{c+Y, dA_{n,B}}/(c+Y) wherever dA_{n,B} > 0, with c+Y rounded to
/// the nearest integer >= 1.  c = 0 reproduces Gill's weird bootstrap.
inline HazardPath weird_bb_draw(const BetaPosterior& post, RandomStream& s) {
    HazardPath path;
    for (const auto& nd : post.nodes) {
        if (!(nd.mean_jump > 0.0)) continue;
        const auto r = std::max<std::int64_t>(1, std::llround(nd.c_plus_y));
        const std::int64_t k = sample_binomial(r, nd.mean_jump, s);
        if (k > 0)
            path.add_exact(nd.time, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(r));
    }
    return path;
}

inline HazardPath weird_bb_draw(const BetaProcessPrior& prior, const SurvivalData& data,
                                RandomStream& s) {
    return weird_bb_draw(beta_posterior_params(prior, data), s);
}

namespace detail {

// Atomized distribution for resampling: jump-point masses S(t-)*dA plus the
// leftover survival mass, sampled as +infinity.
struct ResampleCdf {
    std::vector<double> atoms;
    std::vector<double> cum;

    static ResampleCdf from_path(const std::vector<double>& times,
                                 const std::vector<double>& cdf_after) {
        ResampleCdf r;
        r.atoms = times;
        r.cum = cdf_after;
        return r;
    }

    double sample(RandomStream& s) const {
        const double u = s.uniform();
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        if (it == cum.end()) return std::numeric_limits<double>::infinity();
        return atoms[static_cast<std::size_t>(it - cum.begin())];
    }
};

} // namespace detail

/// Censored resampling BB (Dirichlet-link priors only): lifetimes from
/// F_{n,B} = 1 - prod{1 - (c dA0 + dN)/(c + Y)}, censoring times from the
/// Kaplan-Meier estimate of the censoring distribution, recombined as
/// (min, indicator).  Replicate size is n+a with the fractional-a rounding.
class CensoredResampler {
public:
    CensoredResampler(const BetaProcessPrior& prior, const SurvivalData& data)
        : fallback_time_(data.max_time()) {
        if (!prior.is_dirichlet_link())
            throw std::invalid_argument(
                "censored_resample_bb: requires the Dirichlet link c(s) = a F0[s,inf)");
        const HazardPath mean = beta_posterior_params(prior, data).mean_path();
        life_ = detail::ResampleCdf::from_path(mean.times(), mean.cdf_at_jumps());
        const StepCdf cens = censoring_kaplan_meier(data);
        cens_ = detail::ResampleCdf::from_path(cens.x, cens.y);
        count_ = static_cast<std::size_t>(
            static_cast<std::int64_t>(data.n()) +
            static_cast<std::int64_t>(std::ceil(prior.a())) );
    }

    SurvivalData draw(RandomStream& s) const {
        std::vector<double> times(count_);
        std::vector<int> events(count_);
        for (std::size_t i = 0; i < count_; ++i) {
            const double life = life_.sample(s);
            const double cens = cens_.sample(s);
            if (std::isinf(life) && std::isinf(cens)) {
                times[i] = fallback_time_; // neither distribution reaches: censor at the horizon
                events[i] = 0;
            } else if (life <= cens) {
                times[i] = life;
                events[i] = 1;
            } else {
                times[i] = cens;
                events[i] = 0;
            }
        }
        return SurvivalData(std::move(times), std::move(events));
    }

    std::size_t replicate_size() const { return count_; }

private:
    detail::ResampleCdf life_, cens_;
    double fallback_time_ = 0.0;
    std::size_t count_ = 0;
};

inline SurvivalData censored_resample_bb(const BetaProcessPrior& prior,
                                         const SurvivalData& data, RandomStream& s) {
    return CensoredResampler(prior, data).draw(s);
}

/// theta_chr(A): the cumulative hazard at t0, the product-integral CDF at t0,
/// or the median survival time (+infinity sentinel when never reached).
class HazardFunctional {
public:
    static HazardFunctional cumhaz_at(double t0) { return {Kind::CumHaz, t0, "A:" }; }
    static HazardFunctional cdf_at(double t0) { return {Kind::Cdf, t0, "F:"}; }
    static HazardFunctional median_survival() { return {Kind::Median, 0.0, "median"}; }

    double operator()(const HazardPath& path) const {
        switch (kind_) {
            case Kind::CumHaz: return path.cumhaz(t0_);
            case Kind::Cdf: return path.cdf(t0_);
            case Kind::Median: return path.median_survival();
        }
        throw std::logic_error("HazardFunctional: bad kind");
    }

    std::string name() const {
        return kind_ == Kind::Median ? label_ : label_ + std::to_string(t0_);
    }

private:
    enum class Kind { CumHaz, Cdf, Median };
    HazardFunctional(Kind k, double t0, std::string label)
        : kind_(k), t0_(t0), label_(std::move(label)) {}
    Kind kind_;
    double t0_;
    std::string label_;
};

enum class SurvivalScheme { weird, beta, weird_bb, resample };

inline const char* survival_scheme_name(SurvivalScheme s) {
    switch (s) {
        case SurvivalScheme::weird: return "weird";
        case SurvivalScheme::beta: return "beta";
        case SurvivalScheme::weird_bb: return "weird-bb";
        case SurvivalScheme::resample: return "resample";
    }
    return "?";
}

/// boot hazard-path replicates evaluated through the functional; the resample
/// scheme applies the Nelson-Aalen/Kaplan-Meier estimators to each replicate
/// dataset.  The prior is ignored by the plain weird scheme.
inline PosteriorDraws run_survival_bootstrap(SurvivalScheme scheme, const HazardFunctional& f,
                                             const std::optional<BetaProcessPrior>& prior,
                                             const SurvivalData& data, std::int64_t boot,
                                             std::uint64_t seed, const EngineOptions& opts = {}) {
    if (boot < 1) throw std::invalid_argument("run_survival_bootstrap: boot must be >= 1");
    if (scheme != SurvivalScheme::weird && !prior)
        throw std::invalid_argument("run_survival_bootstrap: this scheme needs a prior");

    std::optional<BetaPosterior> post;
    if (scheme == SurvivalScheme::beta || scheme == SurvivalScheme::weird_bb)
        post = beta_posterior_params(*prior, data);
    std::optional<CensoredResampler> resampler;
    if (scheme == SurvivalScheme::resample) resampler.emplace(*prior, data);

    const RandomStream root(seed);
    std::vector<double> values(static_cast<std::size_t>(boot));
    detail::parallel_for(boot, opts.threads, [&](std::int64_t k) {
        try {
            RandomStream s = root.child(static_cast<std::uint64_t>(k));
            HazardPath path;
            switch (scheme) {
                case SurvivalScheme::weird: path = weird_bootstrap_draw(data, s); break;
                case SurvivalScheme::beta: path = beta_posterior_draw(*post, s); break;
                case SurvivalScheme::weird_bb: path = weird_bb_draw(*post, s); break;
                case SurvivalScheme::resample:
                    path = nelson_aalen(resampler->draw(s));
                    break;
            }
            values[static_cast<std::size_t>(k)] = f(path);
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(k) + ": " + e.what());
        }
    });
    return PosteriorDraws(std::move(values), {seed, boot, survival_scheme_name(scheme)});
}

} // namespace bb
