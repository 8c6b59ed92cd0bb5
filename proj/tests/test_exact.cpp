#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bb/engine.hpp"
#include "bb/exact.hpp"
#include "bb/prior.hpp"

using namespace bb;

TEST_CASE("prob_posterior") {
    SECTION("a = 0 reduces to Beta(k, n-k)") {
        const DataSample data({1.0, 2.0, 3.0, 4.0, 5.0});
        const DirichletPrior vague(0.0, PriorGuess::normal(0, 1));
        const auto p = prob_posterior(vague, data, IntervalUnion::upto(2.5));
        CHECK(p.alpha == 2.0);
        CHECK(p.beta == 3.0);
    }

    SECTION("a = 4, F0(A) = 1/2, n = 6, k = 3 gives Beta(5,5)") {
        const DataSample data({-3.0, -2.0, -1.0, 1.0, 2.0, 3.0});
        const DirichletPrior prior(4.0, PriorGuess::normal(0, 1));
        const auto p = prob_posterior(prior, data, IntervalUnion::upto(0.0));
        CHECK_THAT(p.alpha, Catch::Matchers::WithinAbs(5.0, 1e-12));
        CHECK_THAT(p.beta, Catch::Matchers::WithinAbs(5.0, 1e-12));
        CHECK_THAT(p.mean(), Catch::Matchers::WithinAbs(0.5, 1e-12));
    }

    SECTION("posterior variance is p(1-p)/(m+1)") {
        const BetaParams p{6.0, 14.0}; // Beta(mp, m(1-p)) with m=20, p=0.3
        CHECK_THAT(p.variance(), Catch::Matchers::WithinAbs(0.3 * 0.7 / 21.0, 1e-15));
    }

    SECTION("posterior mean equals F_{n,B}(A) for arbitrary configurations") {
        RandomStream s(41);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> v(6);
            for (auto& x : v) x = sample_normal(s);
            const DataSample data(v);
            const double a = 5.0 * s.uniform();
            const DirichletPrior prior(a, PriorGuess::normal(0.2, 1.4));
            const IntervalUnion A{{-0.8, 0.3}, {0.9, 2.0}};
            const MixtureCdf mix(prior, data);
            const auto p = prob_posterior(prior, data, A);
            const double fnb = A.measure([&](double t) { return mix.cdf(t); });
            CHECK_THAT(p.mean(), Catch::Matchers::WithinAbs(fnb, 1e-12));
        }
    }

    SECTION("degenerate posteriors are rejected") {
        const DataSample data({1.0, 2.0});
        const DirichletPrior vague(0.0, PriorGuess::normal(0, 1));
        CHECK_THROWS_AS(prob_posterior(vague, data, IntervalUnion::upto(0.0)),
                        std::domain_error);
        CHECK_THROWS_AS(prob_posterior(vague, data, IntervalUnion::upto(10.0)),
                        std::domain_error);
    }
}

TEST_CASE("bb_prob_approx") {
    const DataSample data({-2.0, -1.0, -0.5, 0.5, 1.0, 2.0});
    const DirichletPrior prior(4.0, PriorGuess::normal(0, 1));
    const IntervalUnion A = IntervalUnion::upto(0.0);

    SECTION("lattice mean equals F_{n,B}(A) exactly") {
        const auto approx = bb_prob_approx(prior, data, A);
        CHECK(approx.lattice.m == 10);
        CHECK_THAT(approx.lattice.mean(), Catch::Matchers::WithinAbs(approx.p, 1e-12));
    }

    SECTION("variance ratio (m+1)/m against the exact Beta") {
        const int m = 30;
        const double p = 0.3;
        const auto lat = LatticeDistribution::binomial(m, p);
        KahanSum second;
        for (int j = 0; j <= m; ++j) {
            const double x = static_cast<double>(j) / m - p;
            second.add(lat.mass[static_cast<std::size_t>(j)] * x * x);
        }
        const double var_v = second.value();
        const double var_u = p * (1.0 - p) / (m + 1.0);
        CHECK_THAT(var_v / var_u, Catch::Matchers::WithinRel((m + 1.0) / m, 1e-10));
    }

    SECTION("skewness ratio 2 sqrt(m(m+1))/(m+2) at m = 30") {
        const int m = 30;
        const double p = 0.3;
        const double skew_u = 2.0 * std::sqrt(m + 1.0) / (m + 2.0) * (1.0 - 2.0 * p) /
                              std::sqrt(p * (1.0 - p));
        const double skew_v = (1.0 - 2.0 * p) / std::sqrt(m * p * (1.0 - p));
        CHECK_THAT(skew_u / skew_v,
                   Catch::Matchers::WithinRel(2.0 * std::sqrt(m * (m + 1.0)) / (m + 2.0), 1e-12));
        CHECK_THAT(skew_u / skew_v, Catch::Matchers::WithinAbs(1.906, 5e-4));
        // lattice third moment agrees with the closed form for skew V
        const auto lat = LatticeDistribution::binomial(m, p);
        KahanSum third, second;
        for (int j = 0; j <= m; ++j) {
            const double x = static_cast<double>(j) / m - p;
            second.add(lat.mass[static_cast<std::size_t>(j)] * x * x);
            third.add(lat.mass[static_cast<std::size_t>(j)] * x * x * x);
        }
        const double skew_numeric = third.value() / std::pow(second.value(), 1.5);
        CHECK_THAT(skew_numeric, Catch::Matchers::WithinRel(skew_v, 1e-9));
    }

    SECTION("interpolated lattice is close to the exact Beta: KS <= 0.02") {
        const int m = 30;
        const double p = 0.3;
        const auto cdf = interpolated_cdf(LatticeDistribution::binomial(m, p));
        double ks = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            const double x = static_cast<double>(i) / 4000.0;
            ks = std::max(ks, std::fabs(cdf(x) - beta_cdf(x, m * p, m * (1.0 - p))));
        }
        CHECK(ks <= 0.02);
    }
}

TEST_CASE("median_posterior") {
    SECTION("a -> 0 atoms are C(n-1, j-1) (1/2)^{n-1} and sum to one") {
        const DataSample data({0.5, 1.5, 2.5, 3.5, 4.5});
        const DirichletPrior vague(0.0, PriorGuess::uniform(0, 5));
        const auto post = median_posterior(vague, data);
        const double binom[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
        for (int j = 0; j < 5; ++j)
            CHECK_THAT(post.masses()[static_cast<std::size_t>(j)],
                       Catch::Matchers::WithinAbs(binom[j] / 16.0, 1e-12));
        CHECK_THAT(post.atom_mass_total(), Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK(post.total_mass() == post.atom_mass_total());
        CHECK(post.density(1.0) == 0.0);
    }

    SECTION("n = 1, a -> 0: a single atom of mass one") {
        const DataSample data({3.0});
        const DirichletPrior vague(0.0, PriorGuess::uniform(0, 5));
        const auto post = median_posterior(vague, data);
        REQUIRE(post.masses().size() == 1);
        CHECK_THAT(post.masses()[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    }

    SECTION("a = 1, F0 = U(0,1), data {0.25, 0.75}: atoms plus density integrate to one") {
        const DataSample data({0.25, 0.75});
        const DirichletPrior prior(1.0, PriorGuess::uniform(0, 1));
        const auto post = median_posterior(prior, data);
        CHECK_THAT(post.total_mass(200), Catch::Matchers::WithinAbs(1.0, 1e-4));
    }

    SECTION("tied data are rejected") {
        const DataSample data({1.0, 1.0, 2.0});
        const DirichletPrior prior(1.0, PriorGuess::uniform(0, 5));
        CHECK_THROWS_AS(median_posterior(prior, data), std::invalid_argument);
    }

    SECTION("a > 0 requires a density for the prior guess") {
        const DataSample data({1.0, 2.0});
        const DirichletPrior prior(1.0, PriorGuess::empirical({0.5, 1.5, 2.5}));
        CHECK_THROWS_AS(median_posterior(prior, data), std::invalid_argument);
    }
}

TEST_CASE("bb_median_cdf") {
    SECTION("exactly 1/2 where F_{n,B} = 1/2 and n+a is odd") {
        const DataSample data({1.0, 2.0, 3.0});
        const DirichletPrior vague(0.0, PriorGuess::normal(0, 1));
        CHECK_THAT(bb_median_cdf(vague, data, 2.0), Catch::Matchers::WithinAbs(0.5, 1e-12));
    }

    SECTION("degenerate mixture values map to 0 and 1") {
        const DataSample data({1.0, 2.0, 3.0});
        const DirichletPrior vague(0.0, PriorGuess::normal(0, 1));
        CHECK(bb_median_cdf(vague, data, 0.0) == 0.0);
        CHECK(bb_median_cdf(vague, data, 9.0) == 1.0);
    }

    SECTION("worked binomial tail: n+a = 5, F = 0.4") {
        // Pr[Bin(5, 0.4) >= 3] = 0.31744
        const DataSample data({1.0, 2.0, 3.0, 4.0, 5.0});
        const DirichletPrior vague(0.0, PriorGuess::normal(0, 1));
        CHECK_THAT(bb_median_cdf(vague, data, 2.0),
                   Catch::Matchers::WithinAbs(0.31744, 1e-12));
    }

    SECTION("nondecreasing in t") {
        const DataSample data({-1.0, 0.2, 0.9, 2.0});
        const DirichletPrior prior(2.5, PriorGuess::normal(0, 1));
        double prev = -1.0;
        for (int i = 0; i <= 200; ++i) {
            const double t = -4.0 + 8.0 * i / 200.0;
            const double g = bb_median_cdf(prior, data, t);
            REQUIRE(g >= prev - 1e-15);
            prev = g;
        }
    }
}

TEST_CASE("BB median draws follow bb_median_cdf") {
    SECTION("a = 0: atom masses match the replicate-median histogram") {
        const DataSample data({-1.5, -0.7, -0.1, 0.4, 1.1, 1.9, 2.8});
        const DirichletPrior vague(0.0, PriorGuess::normal(0, 1));
        const auto draws =
            run_bootstrap(Scheme::bb, Functional::median(), vague, data, 20000, 55);
        const auto& xs = data.values();
        double prev_cdf = 0.0;
        for (double x : xs) {
            const double g = bb_median_cdf(vague, data, x);
            const double want = g - prev_cdf;
            prev_cdf = g;
            const auto lo = std::lower_bound(draws.values().begin(), draws.values().end(), x);
            const auto hi = std::upper_bound(draws.values().begin(), draws.values().end(), x);
            const double freq = static_cast<double>(hi - lo) / 20000.0;
            const double se = std::sqrt(want * (1.0 - want) / 20000.0);
            CHECK_THAT(freq, Catch::Matchers::WithinAbs(want, 5.0 * se + 1e-9));
        }
    }

    SECTION("a = 3: draw CDF tracks the binomial-tail formula on a grid") {
        const DataSample data({-1.5, -0.7, -0.1, 0.4, 1.1, 1.9, 2.8});
        const DirichletPrior prior(3.0, PriorGuess::normal(0, 1));
        const auto draws =
            run_bootstrap(Scheme::bb, Functional::median(), prior, data, 10000, 56);
        double ks = 0.0;
        for (int i = 0; i <= 300; ++i) {
            const double t = -3.0 + 6.0 * i / 300.0;
            const double ecdf = static_cast<double>(
                                    std::upper_bound(draws.values().begin(),
                                                     draws.values().end(), t) -
                                    draws.values().begin()) /
                                10000.0;
            ks = std::max(ks, std::fabs(ecdf - bb_median_cdf(prior, data, t)));
        }
        CHECK(ks <= 0.03);
    }
}
