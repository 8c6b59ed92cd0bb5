#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "bb/cdf_model.hpp"
#include "bb/engine.hpp"
#include "bb/survival.hpp"

using namespace bb;

namespace {

// Exponential lifetimes with exponential censoring; fixed stream.
SurvivalData censored_exp_sample(std::size_t n, double censor_rate, std::uint64_t seed) {
    RandomStream s = RandomStream(seed).child(5);
    std::vector<double> times(n);
    std::vector<int> events(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double life = sample_exponential(s);
        const double cens = censor_rate > 0.0 ? sample_exponential(s) / censor_rate
                                              : std::numeric_limits<double>::infinity();
        times[i] = std::min(life, cens);
        events[i] = life <= cens ? 1 : 0;
    }
    return SurvivalData(std::move(times), std::move(events));
}

} // namespace

TEST_CASE("risk-set accounting with ties (events before censorings)") {
    const SurvivalData data({1.0, 2.0, 2.0, 3.0}, {0, 1, 1, 1});
    const auto na = nelson_aalen(data);
    REQUIRE(na.times() == std::vector<double>{2.0, 3.0});
    CHECK_THAT(na.jumps()[0], Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    CHECK_THAT(na.jumps()[1], Catch::Matchers::WithinAbs(1.0, 1e-15));
}

TEST_CASE("nelson-aalen") {
    SECTION("uncensored distinct data: jumps 1/(n-i+1)") {
        const SurvivalData data({1.0, 2.0, 3.0, 4.0, 5.0}, {1, 1, 1, 1, 1});
        const auto na = nelson_aalen(data);
        REQUIRE(na.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            REQUIRE(na.jumps()[i] == 1.0 / static_cast<double>(5 - i));
    }

    SECTION("all censored gives the zero path") {
        const SurvivalData data({1.0, 2.0, 3.0}, {0, 0, 0});
        CHECK(nelson_aalen(data).size() == 0);
        RandomStream s(1);
        CHECK_THROWS_AS(weird_bootstrap_draw(data, s), std::invalid_argument);
    }
}

TEST_CASE("kaplan-meier") {
    SECTION("no censoring reproduces the empirical cdf exactly") {
        RandomStream s(2);
        std::vector<double> t(37);
        for (auto& x : t) x = sample_exponential(s);
        const SurvivalData data(t, std::vector<int>(37, 1));
        const auto km = kaplan_meier(data);
        std::sort(t.begin(), t.end());
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double ecdf = static_cast<double>(i + 1) / static_cast<double>(t.size());
            REQUIRE(km(t[i]) == ecdf); // bit-exact through the rational product integral
        }
    }

    SECTION("largest observation censored leaves a mass deficit") {
        const SurvivalData data({1.0, 2.0, 3.0}, {1, 1, 0});
        const auto km = kaplan_meier(data);
        CHECK(km(10.0) < 1.0);
        CHECK_THAT(km(10.0), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    }

    SECTION("hand product integral for {1, 2+, 3}") {
        const SurvivalData data({1.0, 2.0, 3.0}, {1, 0, 1});
        const auto km = kaplan_meier(data);
        CHECK_THAT(km(1.0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
        CHECK_THAT(km(2.5), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
        CHECK_THAT(km(3.0), Catch::Matchers::WithinAbs(1.0, 1e-15));
    }

    SECTION("km equals the product integral of the nelson-aalen path") {
        const SurvivalData data = censored_exp_sample(40, 0.5, 3);
        const auto na = nelson_aalen(data);
        const auto km = kaplan_meier(data);
        for (double t : na.times()) REQUIRE(km(t) == na.cdf(t));
    }
}

TEST_CASE("hazard path") {
    SECTION("empty path: A = 0, F = 0, median at the +infinity sentinel") {
        const HazardPath path;
        CHECK(path.cumhaz(10.0) == 0.0);
        CHECK(path.cdf(10.0) == 0.0);
        CHECK(std::isinf(path.median_survival()));
    }

    SECTION("single unit jump at t = 5") {
        HazardPath path;
        path.add(5.0, 1.0);
        CHECK(path.cdf(4.9) == 0.0);
        CHECK(path.cdf(5.0) == 1.0);
        CHECK(path.median_survival() == 5.0);
    }

    SECTION("cdf stays in [0,1] and is nondecreasing for any jump sequence") {
        RandomStream s(4);
        HazardPath path;
        double t = 0.0;
        for (int i = 0; i < 60; ++i) {
            t += sample_exponential(s);
            path.add(t, s.uniform());
        }
        double prev = 0.0;
        for (int i = 0; i <= 300; ++i) {
            const double x = 0.3 * i;
            const double F = path.cdf(x);
            REQUIRE(F >= prev - 1e-15);
            REQUIRE(F <= 1.0);
            prev = F;
        }
    }

    SECTION("continuous limit: fine small jumps give F close to 1 - exp(-A)") {
        HazardPath path;
        const int cells = 4000;
        double sum_sq = 0.0;
        for (int i = 1; i <= cells; ++i) {
            const double jump = 2.0 / cells;
            path.add(static_cast<double>(i), jump);
            sum_sq += jump * jump;
        }
        const double A = path.cumhaz(cells);
        CHECK_THAT(path.cdf(cells),
                   Catch::Matchers::WithinAbs(-std::expm1(-A), 2.0 * sum_sq));
    }

    SECTION("jump validation") {
        HazardPath path;
        CHECK_THROWS_AS(path.add(1.0, 1.5), std::invalid_argument);
        CHECK_THROWS_AS(path.add_exact(1.0, 3, 2), std::invalid_argument);
        path.add(2.0, 0.5);
        CHECK_THROWS_AS(path.add(1.0, 0.5), std::invalid_argument);
    }
}

TEST_CASE("weird bootstrap") {
    const SurvivalData data = censored_exp_sample(50, 0.5, 7);
    const auto na = nelson_aalen(data);

    SECTION("increment moments match the Nelson-Aalen target") {
        const int draws = 10000;
        std::vector<KahanSum> acc(na.size()), acc2(na.size());
        RandomStream root(8);
        for (int b = 0; b < draws; ++b) {
            RandomStream s = root.child(static_cast<std::uint64_t>(b));
            const auto path = weird_bootstrap_draw(data, s);
            // zero jumps are dropped from the path; walk by matching times
            std::size_t j = 0;
            for (std::size_t i = 0; i < na.size(); ++i) {
                double jump = 0.0;
                if (j < path.size() && path.times()[j] == na.times()[i]) jump = path.jumps()[j++];
                acc[i].add(jump);
                acc2[i].add(jump * jump);
            }
        }
        for (std::size_t i = 0; i < na.size(); ++i) {
            const double want_mean = na.jumps()[i];
            const double y = static_cast<double>(data.y_at(na.times()[i]));
            const double want_var = want_mean * (1.0 - want_mean) / y;
            const double mean = acc[i].value() / draws;
            const double var = acc2[i].value() / draws - mean * mean;
            REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(
                                   want_mean, 5.0 * std::sqrt(want_var / draws) + 1e-12));
            if (want_var > 0.0) REQUIRE_THAT(var, Catch::Matchers::WithinRel(want_var, 0.10));
        }
    }

    SECTION("final event with Y = 1 always jumps to one") {
        const SurvivalData tiny({1.0, 2.0}, {1, 1});
        RandomStream s(9);
        for (int i = 0; i < 200; ++i) {
            const auto path = weird_bootstrap_draw(tiny, s);
            REQUIRE(path.cdf(2.0) == 1.0);
        }
    }
}

TEST_CASE("beta process posterior") {
    const SurvivalData data = censored_exp_sample(30, 0.4, 10);

    SECTION("c = 0 collapses the mean path to Nelson-Aalen exactly") {
        const auto prior = BetaProcessPrior::constant(0.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, data);
        CHECK(post.truncated); // nothing identifies A beyond the data when c = 0
        const auto mean = post.mean_path();
        const auto na = nelson_aalen(data);
        REQUIRE(mean.times() == na.times());
        REQUIRE(mean.jumps() == na.jumps());
    }

    SECTION("no data gives back the prior-guess hazard on the grid") {
        const auto prior = BetaProcessPrior::dirichlet_link(4.0, PriorGuess::exponential(0.5));
        const SurvivalData empty;
        const auto post = beta_posterior_params(prior, empty, 3.0);
        const auto mean = post.mean_path();
        CHECK_THAT(mean.cumhaz(3.0),
                   Catch::Matchers::WithinAbs(prior.prior_cumhaz(3.0), 1e-9));
    }

    SECTION("event-increment moments follow the Beta posterior formulas") {
        const auto prior = BetaProcessPrior::dirichlet_link(3.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, data);
        // first event node
        std::size_t node = 0;
        while (!post.nodes[node].is_event) ++node;
        const auto& nd = post.nodes[node];
        RandomStream root(11);
        const int draws = 20000;
        KahanSum acc, acc2;
        for (int b = 0; b < draws; ++b) {
            RandomStream s = root.child(static_cast<std::uint64_t>(b));
            const auto path = beta_posterior_draw(post, s);
            double jump = 0.0;
            for (std::size_t i = 0; i < path.size(); ++i)
                if (path.times()[i] == nd.time) jump = path.jumps()[i];
            acc.add(jump);
            acc2.add(jump * jump);
        }
        const double mean = acc.value() / draws;
        const double var = acc2.value() / draws - mean * mean;
        const double want_var = nd.mean_jump * (1.0 - nd.mean_jump) / (nd.c_plus_y + 1.0);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(nd.mean_jump,
                                                    5.0 * std::sqrt(want_var / draws)));
        CHECK_THAT(var, Catch::Matchers::WithinRel(want_var, 0.10));
    }

    SECTION("c = 0 posterior draws jump only at event times per Eq-style Beta increments") {
        const auto prior = BetaProcessPrior::constant(0.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, data);
        RandomStream s(12);
        const auto path = beta_posterior_draw(post, s);
        const auto na = nelson_aalen(data);
        const std::set<double> events(na.times().begin(), na.times().end());
        for (double t : path.times()) REQUIRE(events.count(t) == 1);
    }

    SECTION("posterior mean of the drawn path matches A_{n,B}(t)") {
        const auto prior = BetaProcessPrior::dirichlet_link(2.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, data);
        const double t0 = data.max_time() * 0.6;
        const double want = post.mean_path().cumhaz(t0);
        RandomStream root(13);
        const int draws = 20000;
        KahanSum acc, acc2;
        for (int b = 0; b < draws; ++b) {
            RandomStream s = root.child(static_cast<std::uint64_t>(b));
            const double a_t = beta_posterior_draw(post, s).cumhaz(t0);
            acc.add(a_t);
            acc2.add(a_t * a_t);
        }
        const double mean = acc.value() / draws;
        const double se = std::sqrt((acc2.value() / draws - mean * mean) / draws);
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(want, 5.0 * se + 1e-6));
    }

    SECTION("halving the grid step leaves the draw moments in place") {
        const auto c20 =
            BetaProcessPrior::dirichlet_link(2.0, PriorGuess::exponential(1.0), 20);
        const auto c40 =
            BetaProcessPrior::dirichlet_link(2.0, PriorGuess::exponential(1.0), 40);
        const double t0 = data.max_time() * 0.5;
        auto mc = [&](const BetaProcessPrior& prior, std::uint64_t seed) {
            const auto post = beta_posterior_params(prior, data);
            RandomStream root(seed);
            const int draws = 20000;
            KahanSum acc, acc2;
            for (int b = 0; b < draws; ++b) {
                RandomStream s = root.child(static_cast<std::uint64_t>(b));
                const double a_t = beta_posterior_draw(post, s).cumhaz(t0);
                acc.add(a_t);
                acc2.add(a_t * a_t);
            }
            const double mean = acc.value() / draws;
            return std::pair{mean,
                             std::sqrt((acc2.value() / draws - mean * mean) / draws)};
        };
        const auto [m20, se20] = mc(c20, 14);
        const auto [m40, se40] = mc(c40, 15);
        CHECK_THAT(m20, Catch::Matchers::WithinAbs(m40, 5.0 * (se20 + se40)));
    }
}

TEST_CASE("weird Bayesian bootstrap") {
    const SurvivalData data = censored_exp_sample(40, 0.5, 16);

    SECTION("c = 0 reproduces Gill's weird bootstrap bitwise on a shared stream") {
        const auto prior = BetaProcessPrior::constant(0.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, data);
        for (std::uint64_t k = 0; k < 200; ++k) {
            RandomStream s1 = RandomStream(17).child(k);
            RandomStream s2 = RandomStream(17).child(k);
            const auto a = weird_bb_draw(post, s1);
            const auto b = weird_bootstrap_draw(data, s2);
            REQUIRE(a.times() == b.times());
            REQUIRE(a.jumps() == b.jumps());
        }
    }

    SECTION("moments: mean dA_{n,B}, variance dA(1-dA)/(c+Y)") {
        const auto prior = BetaProcessPrior::dirichlet_link(3.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, data);
        std::size_t node = 0;
        while (!post.nodes[node].is_event) ++node;
        const auto& nd = post.nodes[node];
        const auto r = static_cast<double>(std::max<std::int64_t>(1, std::llround(nd.c_plus_y)));
        RandomStream root(18);
        const int draws = 20000;
        KahanSum acc, acc2;
        for (int b = 0; b < draws; ++b) {
            RandomStream s = root.child(static_cast<std::uint64_t>(b));
            const auto path = weird_bb_draw(post, s);
            double jump = 0.0;
            for (std::size_t i = 0; i < path.size(); ++i)
                if (path.times()[i] == nd.time) jump = path.jumps()[i];
            acc.add(jump);
            acc2.add(jump * jump);
        }
        const double mean = acc.value() / draws;
        const double var = acc2.value() / draws - mean * mean;
        const double want_var = nd.mean_jump * (1.0 - nd.mean_jump) / r;
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(nd.mean_jump,
                                                    5.0 * std::sqrt(want_var / draws)));
        CHECK_THAT(var, Catch::Matchers::WithinRel(want_var, 0.10));
        // the (c+Y+1)/(c+Y) gap from the exact posterior variance
        const double exact_var = nd.mean_jump * (1.0 - nd.mean_jump) / (nd.c_plus_y + 1.0);
        CHECK(want_var > exact_var);
    }

    SECTION("degenerate mean jump of one is kept at one") {
        const SurvivalData tiny({1.0}, {1});
        const auto prior = BetaProcessPrior::constant(0.0, PriorGuess::exponential(1.0));
        const auto post = beta_posterior_params(prior, tiny);
        RandomStream s(19);
        for (int i = 0; i < 100; ++i) {
            const auto path = weird_bb_draw(post, s);
            REQUIRE(path.cdf(1.0) == 1.0);
        }
    }
}

TEST_CASE("censored resampling BB") {
    SECTION("uncensored a = 0 reduces to Efron resampling of lifetimes") {
        RandomStream gen = RandomStream(20).child(2);
        std::vector<double> t(12);
        for (auto& x : t) x = sample_exponential(gen);
        const SurvivalData data(t, std::vector<int>(12, 1));
        const auto prior = BetaProcessPrior::dirichlet_link(0.0, PriorGuess::exponential(1.0));
        RandomStream s(21);
        const auto rep = censored_resample_bb(prior, data, s);
        REQUIRE(rep.n() == 12);
        const std::set<double> pool(t.begin(), t.end());
        for (std::size_t i = 0; i < rep.unique_times().size(); ++i) {
            REQUIRE(pool.count(rep.unique_times()[i]) == 1);
            REQUIRE(rep.censored_at(i) == 0);
        }
    }

    SECTION("constant-c priors are rejected (only the Dirichlet link is offered)") {
        const SurvivalData data({1.0, 2.0}, {1, 1});
        const auto prior = BetaProcessPrior::constant(1.0, PriorGuess::exponential(1.0));
        RandomStream s(22);
        CHECK_THROWS_AS(censored_resample_bb(prior, data, s), std::invalid_argument);
    }

    SECTION("replicate censoring fraction tracks the observed fraction") {
        const SurvivalData data = censored_exp_sample(60, 0.25, 23); // light censoring
        double observed = 0.0;
        for (std::size_t i = 0; i < data.unique_times().size(); ++i)
            observed += static_cast<double>(data.censored_at(i));
        observed /= static_cast<double>(data.n());
        const auto prior = BetaProcessPrior::dirichlet_link(0.0, PriorGuess::exponential(1.0));
        const CensoredResampler resampler(prior, data);
        RandomStream root(24);
        KahanSum frac;
        const int reps = 10000;
        for (int b = 0; b < reps; ++b) {
            RandomStream s = root.child(static_cast<std::uint64_t>(b));
            const auto rep = resampler.draw(s);
            double c = 0.0;
            for (std::size_t i = 0; i < rep.unique_times().size(); ++i)
                c += static_cast<double>(rep.censored_at(i));
            frac.add(c / static_cast<double>(rep.n()));
        }
        CHECK_THAT(frac.value() / reps, Catch::Matchers::WithinAbs(observed, 0.02));
    }

    SECTION("lifetimes are marginally distributed as F_{n,B}") {
        // with no censorings H_n is degenerate, every c* = +infinity and the
        // replicate observations are exactly the lifetime draws
        RandomStream gen = RandomStream(25).child(2);
        std::vector<double> t(20);
        for (auto& x : t) x = sample_exponential(gen);
        const SurvivalData data(t, std::vector<int>(20, 1));
        const auto prior = BetaProcessPrior::dirichlet_link(2.0, PriorGuess::exponential(1.0));
        const auto mean = beta_posterior_params(prior, data).mean_path();
        const CensoredResampler resampler(prior, data);
        RandomStream root(26);
        std::vector<double> draws; // finite lifetimes; residual-mass draws sit beyond the grid
        double total = 0.0;
        const int reps = 5000; // 22 lifetimes each
        for (int b = 0; b < reps; ++b) {
            RandomStream s = root.child(static_cast<std::uint64_t>(b));
            const auto rep = resampler.draw(s);
            total += static_cast<double>(rep.n());
            for (std::size_t i = 0; i < rep.unique_times().size(); ++i)
                for (std::int64_t k = 0; k < rep.events_at(i); ++k)
                    draws.push_back(rep.unique_times()[i]);
        }
        std::sort(draws.begin(), draws.end());
        double sup = 0.0;
        for (double x : mean.times()) {
            const double ecdf = static_cast<double>(
                                    std::upper_bound(draws.begin(), draws.end(), x) -
                                    draws.begin()) /
                                total;
            sup = std::max(sup, std::fabs(ecdf - mean.cdf(x)));
        }
        CHECK(sup <= 0.01);
    }

    SECTION("uncensored a = 0: F(t0) draws match the iid BB set-probability draws") {
        RandomStream gen = RandomStream(28).child(2);
        std::vector<double> t(25);
        for (auto& x : t) x = sample_exponential(gen);
        const SurvivalData sdata(t, std::vector<int>(25, 1));
        const DataSample idata(t);
        const double t0 = idata.values()[12];

        const auto prior = BetaProcessPrior::dirichlet_link(0.0, PriorGuess::exponential(1.0));
        const auto sdraws = run_survival_bootstrap(
            SurvivalScheme::resample, HazardFunctional::cdf_at(t0), prior, sdata, 10000, 29);
        const DirichletPrior vague(0.0, PriorGuess::exponential(1.0));
        const auto idraws = run_bootstrap(
            Scheme::bb, Functional::prob(IntervalUnion::upto(t0)), vague, idata, 10000, 30);
        // two-sample KS
        double ks = 0.0;
        const auto& a = sdraws.values();
        const auto& b = idraws.values();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double fa = static_cast<double>(i + 1) / static_cast<double>(a.size());
            const double fb = static_cast<double>(
                                  std::upper_bound(b.begin(), b.end(), a[i]) - b.begin()) /
                              static_cast<double>(b.size());
            ks = std::max(ks, std::fabs(fa - fb));
        }
        CHECK(ks <= 0.03);
    }
}

TEST_CASE("hazard functionals and the survival driver") {
    SECTION("functional values on hand paths") {
        HazardPath path;
        path.add(2.0, 0.25);
        path.add(4.0, 0.5);
        CHECK_THAT(HazardFunctional::cumhaz_at(3.0)(path),
                   Catch::Matchers::WithinAbs(0.25, 1e-15));
        CHECK_THAT(HazardFunctional::cdf_at(4.0)(path),
                   Catch::Matchers::WithinAbs(1.0 - 0.75 * 0.5, 1e-15));
        CHECK(HazardFunctional::median_survival()(path) == 4.0);
    }

    SECTION("driver is deterministic and worker-invariant") {
        const SurvivalData data = censored_exp_sample(30, 0.4, 31);
        const auto prior = BetaProcessPrior::dirichlet_link(1.5, PriorGuess::exponential(1.0));
        EngineOptions one;
        one.threads = 1;
        EngineOptions four;
        four.threads = 4;
        for (auto scheme : {SurvivalScheme::weird, SurvivalScheme::beta,
                            SurvivalScheme::weird_bb, SurvivalScheme::resample}) {
            const auto d1 = run_survival_bootstrap(scheme, HazardFunctional::median_survival(),
                                                   prior, data, 101, 32, one);
            const auto d4 = run_survival_bootstrap(scheme, HazardFunctional::median_survival(),
                                                   prior, data, 101, 32, four);
            REQUIRE(d1.values() == d4.values());
        }
    }

    SECTION("schemes other than weird require a prior") {
        const SurvivalData data = censored_exp_sample(10, 0.4, 33);
        CHECK_THROWS_AS(
            run_survival_bootstrap(SurvivalScheme::beta, HazardFunctional::cdf_at(1.0),
                                   std::nullopt, data, 10, 1),
            std::invalid_argument);
    }
}
