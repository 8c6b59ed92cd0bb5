#pragma once

// Semiparametric regression BB: least squares, the flat-prior posterior
// residual density (a variable-kernel mixture), and the vague-prior /
// informative replicate pipeline of y = x'beta + sigma*eps with eps ~ F and
// F ~ Dir(a Phi).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bb/cdf_model.hpp"
#include "bb/engine.hpp"
#include "bb/random.hpp"
#include "bb/special.hpp"

namespace bb {

/// Design rows and responses; M = (1/n) sum x_i x_i' must be invertible.
class RegressionData {
public:
    RegressionData(std::vector<std::vector<double>> rows, std::vector<double> responses)
        : rows_(std::move(rows)), y_(std::move(responses)) {
        if (rows_.empty() || rows_.size() != y_.size())
            throw std::invalid_argument("RegressionData: row/response size mismatch");
        p_ = rows_.front().size();
        if (p_ == 0) throw std::invalid_argument("RegressionData: empty design row");
        for (const auto& r : rows_)
            if (r.size() != p_)
                throw std::invalid_argument("RegressionData: ragged design rows");
        if (rows_.size() <= p_)
            throw std::invalid_argument("RegressionData: need n > p");
        bool tied = false;
        std::vector<double> ys = y_;
        std::sort(ys.begin(), ys.end());
        for (std::size_t i = 0; i + 1 < ys.size(); ++i)
            if (ys[i] == ys[i + 1]) tied = true;
        tied_responses_ = tied;
    }

    std::size_t n() const { return rows_.size(); }
    std::size_t p() const { return p_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    const std::vector<double>& y() const { return y_; }
    /// The posterior factorization assumes distinct responses; ties only
    /// warrant a warning, not a failure.
    bool tied_responses() const { return tied_responses_; }

    Eigen::MatrixXd design() const {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(p_));
        for (std::size_t i = 0; i < n(); ++i)
            for (std::size_t j = 0; j < p_; ++j)
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows_[i][j];
        return X;
    }

private:
    std::vector<std::vector<double>> rows_;
    std::vector<double> y_;
    std::size_t p_ = 0;
    bool tied_responses_ = false;
};

struct RegressionFit {
    std::vector<double> beta;       // least squares estimate
    double sigma_sq = 0.0;          // sum e_raw^2 / (n - p)
    double sigma = 0.0;
    std::vector<double> residuals;  // standardized: (y_i - x_i'beta)/sigma
    std::vector<double> leverage;   // h_i = sqrt((1/n) x_i' M^{-1} x_i)
    double condition = 0.0;         // spectral condition number of M
    bool degenerate_sigma = false;  // perfect fit
    Eigen::MatrixXd chol_L;         // M = L L'
    std::size_t n = 0, p = 0;

    double fitted(const std::vector<double>& x) const { return dot(beta, x); }
    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size())
            throw std::invalid_argument("regression: covariate length mismatch");
        KahanSum s;
        for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
        return s.value();
    }
};

inline RegressionFit least_squares(const RegressionData& data) {
    const auto n = static_cast<Eigen::Index>(data.n());
    const auto p = static_cast<Eigen::Index>(data.p());
    const Eigen::MatrixXd X = data.design();
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(data.y().data(), static_cast<Eigen::Index>(data.n()));
    const Eigen::MatrixXd M = X.transpose() * X / static_cast<double>(n);

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const double smin = svd.singularValues()(p - 1), smax = svd.singularValues()(0);
    if (!(smin > smax * 1e-12))
        throw std::runtime_error("least_squares: singular design matrix M");

    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("least_squares: Cholesky of M failed");

    RegressionFit fit;
    fit.n = data.n();
    fit.p = data.p();
    fit.condition = smax / smin;
    fit.chol_L = llt.matrixL();
    const Eigen::VectorXd beta = llt.solve(X.transpose() * y / static_cast<double>(n));
    fit.beta.assign(beta.data(), beta.data() + p);

    const Eigen::VectorXd raw = y - X * beta;
    fit.sigma_sq = raw.squaredNorm() / static_cast<double>(n - p);
    fit.sigma = std::sqrt(fit.sigma_sq);
    fit.degenerate_sigma = !(fit.sigma_sq > 0.0) ||
                           fit.sigma_sq < 1e-24 * std::max(1.0, y.squaredNorm() / n);
    fit.residuals.resize(data.n());
    fit.leverage.resize(data.n());
    for (Eigen::Index i = 0; i < n; ++i) {
        fit.residuals[static_cast<std::size_t>(i)] =
            fit.degenerate_sigma ? 0.0 : raw(i) / fit.sigma;
        const Eigen::VectorXd w = fit.chol_L.triangularView<Eigen::Lower>().solve(
            X.row(i).transpose());
        fit.leverage[static_cast<std::size_t>(i)] =
            std::sqrt(w.squaredNorm() / static_cast<double>(n));
    }
    return fit;
}

/// Posterior residual density under the flat beta prior with sigma treated
/// as known:  f_{n,B}(t) = (a/(a+n)) phi(t)
///                        + (n/(a+n)) (1/n) sum phi((t - e_i)/h_i) / h_i.
inline double posterior_residual_density(const RegressionFit& fit, double a, double t) {
    const double n = static_cast<double>(fit.n);
    KahanSum kernels;
    for (std::size_t i = 0; i < fit.n; ++i)
        kernels.add(normal_pdf((t - fit.residuals[i]) / fit.leverage[i]) / fit.leverage[i]);
    return a / (a + n) * normal_pdf(t) + kernels.value() / (a + n);
}

struct RegressionReplicate {
    std::vector<double> beta;
    double sigma = 0.0;
    WeightedAtoms residuals; // F*: the replicate residual distribution
};

namespace detail {

inline void draw_beta_sigma(const RegressionData& data, const RegressionFit& fit,
                            RandomStream& s, RegressionReplicate& rep) {
    if (fit.degenerate_sigma)
        throw std::runtime_error("regression replicate: degenerate sigma (perfect fit)");
    const double shape = 0.5 * static_cast<double>(fit.n - fit.p);
    const double rate = shape * fit.sigma_sq;
    const double precision = sample_gamma(shape, s) / rate; // 1/sigma^2
    rep.sigma = 1.0 / std::sqrt(precision);

    const auto p = static_cast<Eigen::Index>(fit.p);
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = sample_normal(s);
    // cov(beta*) = (sigma*^2/n) M^{-1} = (sigma*/sqrt(n) L^{-T} z) outer itself
    const Eigen::VectorXd w =
        fit.chol_L.transpose().triangularView<Eigen::Upper>().solve(z);
    rep.beta.resize(fit.p);
    const double scale = rep.sigma / std::sqrt(static_cast<double>(data.n()));
    for (Eigen::Index j = 0; j < p; ++j)
        rep.beta[static_cast<std::size_t>(j)] = fit.beta[static_cast<std::size_t>(j)] + scale * w(j);
}

inline std::vector<double> conditional_residuals(const RegressionData& data,
                                                 const RegressionReplicate& rep) {
    std::vector<double> eps(data.n());
    for (std::size_t i = 0; i < data.n(); ++i)
        eps[i] = (data.y()[i] - RegressionFit::dot(rep.beta, data.rows()[i])) / rep.sigma;
    return eps;
}

} // namespace detail

/// Vague-prior replicate: 1/sigma^2 ~ Gamma{(n-p)/2, (n-p) sigma_hat^2 / 2}
/// (shape, rate), beta* ~ N(beta_hat, (1/n) sigma*^2 M^{-1}), and n residuals
/// resampled from the empirical distribution of (y_i - x_i'beta*)/sigma*.
inline RegressionReplicate vague_bb_replicate(const RegressionData& data,
                                              const RegressionFit& fit, RandomStream& s) {
    RegressionReplicate rep;
    detail::draw_beta_sigma(data, fit, s, rep);
    const auto eps = detail::conditional_residuals(data, rep);
    const std::size_t n = data.n();
    std::vector<double> atoms(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto idx = static_cast<std::size_t>(s.uniform() * static_cast<double>(n));
        if (idx >= n) idx = n - 1;
        atoms[i] = eps[idx];
    }
    rep.residuals = WeightedAtoms(std::move(atoms),
                                  std::vector<double>(n, 1.0 / static_cast<double>(n)));
    return rep;
}

/// Informative replicate: given (beta*, sigma*), the residual distribution is
/// Dir{a Phi + sum delta(eps_i*)}, so the BB draws n+a residuals from the
/// mixture (a Phi + sum delta(eps_i*))/(a+n) with the fractional-a rule.
inline RegressionReplicate informative_bb_replicate(const RegressionData& data,
                                                    const RegressionFit& fit, double a,
                                                    RandomStream& s) {
    if (!(a >= 0.0)) throw std::invalid_argument("informative_bb_replicate: a must be >= 0");
    RegressionReplicate rep;
    detail::draw_beta_sigma(data, fit, s, rep);
    const auto eps = detail::conditional_residuals(data, rep);
    const std::size_t n = data.n();
    const double nd = static_cast<double>(n);
    const double m_floor = std::floor(a);
    const bool integral = (m_floor == a);
    const std::size_t count = n + static_cast<std::size_t>(m_floor) + (integral ? 0 : 1);
    std::vector<double> atoms(count), weights(count, 1.0 / (nd + a));
    const double w_prior = a / (a + nd);
    for (std::size_t i = 0; i < count; ++i) {
        const double u_branch = s.uniform();
        const double u_value = s.uniform();
        if (u_branch < w_prior) {
            atoms[i] = normal_quantile(u_value);
        } else {
            auto idx = static_cast<std::size_t>(u_value * nd);
            if (idx >= n) idx = n - 1;
            atoms[i] = eps[idx];
        }
    }
    if (!integral) weights.back() = (a - m_floor) / (nd + a);
    rep.residuals = WeightedAtoms(std::move(atoms), std::move(weights));
    return rep;
}

/// theta(beta, sigma, F) for the worked §-style parameters: regression
/// deciles x'beta + sigma F^{-1}(j/10), exceedance probabilities
/// F((y - x'beta)/sigma), and the expected absolute deviation sigma int|e|dF.
class RegressionFunctional {
public:
    static RegressionFunctional decile(std::vector<double> at, int j) {
        if (j < 1 || j > 9)
            throw std::invalid_argument("decile functional: j must lie in 1..9");
        RegressionFunctional f(Kind::Decile, "decile:" + std::to_string(j));
        f.at_ = std::move(at);
        f.p_ = static_cast<double>(j) / 10.0;
        return f;
    }
    static RegressionFunctional prob_le(std::vector<double> at, double y) {
        RegressionFunctional f(Kind::ProbLe, "proble:" + std::to_string(y));
        f.at_ = std::move(at);
        f.y_ = y;
        return f;
    }
    static RegressionFunctional abs_dev(std::vector<double> at) {
        RegressionFunctional f(Kind::AbsDev, "absdev");
        f.at_ = std::move(at);
        return f;
    }

    double operator()(const RegressionReplicate& rep) const {
        const double xb = RegressionFit::dot(rep.beta, at_);
        switch (kind_) {
            case Kind::Decile:
                return xb + rep.sigma * rep.residuals.quantile(p_);
            case Kind::ProbLe:
                return rep.residuals.cdf((y_ - xb) / rep.sigma);
            case Kind::AbsDev: {
                KahanSum s;
                for (std::size_t i = 0; i < rep.residuals.atoms.size(); ++i)
                    s.add(rep.residuals.weights[i] * std::fabs(rep.residuals.atoms[i]));
                return rep.sigma * s.value();
            }
        }
        throw std::logic_error("RegressionFunctional: bad kind");
    }

    const std::string& name() const { return name_; }

private:
    enum class Kind { Decile, ProbLe, AbsDev };
    RegressionFunctional(Kind k, std::string n) : kind_(k), name_(std::move(n)) {}
    Kind kind_;
    std::string name_;
    std::vector<double> at_;
    double p_ = 0.5;
    double y_ = 0.0;
};

/// boot replicates of the regression functional; a = 0 runs the vague-prior
/// scheme, a > 0 the informative one.
inline PosteriorDraws run_regression_bootstrap(const RegressionData& data,
                                               const RegressionFunctional& f, double a,
                                               std::int64_t boot, std::uint64_t seed,
                                               const EngineOptions& opts = {}) {
    if (boot < 1) throw std::invalid_argument("run_regression_bootstrap: boot must be >= 1");
    const RegressionFit fit = least_squares(data);
    const RandomStream root(seed);
    std::vector<double> values(static_cast<std::size_t>(boot));
    detail::parallel_for(boot, opts.threads, [&](std::int64_t k) {
        try {
            RandomStream s = root.child(static_cast<std::uint64_t>(k));
            const RegressionReplicate rep = a == 0.0
                                                ? vague_bb_replicate(data, fit, s)
                                                : informative_bb_replicate(data, fit, a, s);
            values[static_cast<std::size_t>(k)] = f(rep);
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(k) + ": " + e.what());
        }
    });
    return PosteriorDraws(std::move(values), {seed, boot, a == 0.0 ? "regress-vague" : "regress-bb"});
}

} // namespace bb
