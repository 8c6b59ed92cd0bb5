// bb: command-line front end for the Bayesian bootstrap library.
//
// Every command is a thin adapter over the library: numbers in the output are
// the library-call results, unchanged.  The RNG seed is always echoed so any
// published number can be reproduced; with --format tsv-histogram the draw
// distribution is emitted as (bin_left, bin_right, count) rows instead of
// JSON.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bb/bb.hpp"

using nlohmann::json;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNumeric = 3;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw InputError("empty input file: " + path);
    return lines;
}

std::vector<double> parse_fields(const std::string& line, const std::string& path) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw InputError("bad numeric field '" + tok + "' in " + path);
        }
    }
    return out;
}

bb::DataSample load_column(const std::string& path) {
    std::vector<double> v;
    for (const auto& line : read_lines(path)) {
        const auto fields = parse_fields(line, path);
        if (fields.size() != 1)
            throw InputError("expected a single column in " + path);
        v.push_back(fields[0]);
    }
    return bb::DataSample(std::move(v));
}

bb::SurvivalData load_survival(const std::string& path) {
    std::vector<double> times;
    std::vector<int> events;
    for (const auto& line : read_lines(path)) {
        const auto fields = parse_fields(line, path);
        if (fields.size() != 2)
            throw InputError("expected time,event rows in " + path);
        times.push_back(fields[0]);
        events.push_back(fields[1] != 0.0 ? 1 : 0);
    }
    return bb::SurvivalData(std::move(times), std::move(events));
}

bb::RegressionData load_regression(const std::string& path, bool add_intercept) {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (const auto& line : read_lines(path)) {
        auto fields = parse_fields(line, path);
        if (fields.size() < 2)
            throw InputError("expected y,x1,...,xp rows in " + path);
        y.push_back(fields[0]);
        std::vector<double> row;
        if (add_intercept) row.push_back(1.0);
        row.insert(row.end(), fields.begin() + 1, fields.end());
        rows.push_back(std::move(row));
    }
    return bb::RegressionData(std::move(rows), std::move(y));
}

double parse_bound(const std::string& tok) {
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(tok);
}

bb::IntervalUnion parse_set(const std::string& spec) {
    std::vector<std::pair<double, double>> parts;
    std::stringstream ss(spec);
    std::string piece;
    while (std::getline(ss, piece, ';')) {
        const auto comma = piece.find(',');
        if (comma == std::string::npos)
            throw InputError("set spec '" + spec + "': expected L,U pairs");
        parts.emplace_back(parse_bound(piece.substr(0, comma)),
                           parse_bound(piece.substr(comma + 1)));
    }
    return bb::IntervalUnion(std::move(parts));
}

bb::Functional parse_functional(const std::string& spec) {
    if (spec == "mean") return bb::Functional::mean();
    if (spec == "median") return bb::Functional::median();
    if (spec == "sd") return bb::Functional::std_dev();
    if (spec == "mad") return bb::Functional::mad();
    if (spec.rfind("quantile:", 0) == 0)
        return bb::Functional::quantile(std::stod(spec.substr(9)));
    if (spec.rfind("prob:", 0) == 0) return bb::Functional::prob(parse_set(spec.substr(5)));
    throw InputError("unknown functional '" + spec + "'");
}

std::vector<double> parse_point(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw InputError("empty covariate point");
    return out;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json finite_or_string(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "infinity" : "-infinity";
}

json draw_summary(const bb::PosteriorDraws& draws) {
    json q;
    const bb::MidpointQuantile mq(draws.values());
    for (double p : {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99}) {
        std::ostringstream key;
        key << p;
        q[key.str()] = finite_or_string(mq(p));
    }
    return json{{"count", draws.boot()},
                {"mean", finite_or_string(draws.mean())},
                {"sd", finite_or_string(draws.sd())},
                {"quantiles", q}};
}

void emit_histogram(const bb::PosteriorDraws& draws, int bins, std::ostream& os) {
    const auto& v = draws.values();
    const double lo = v.front(), hi = v.back();
    if (!(hi > lo)) {
        os << lo << '\t' << hi << '\t' << v.size() << '\n';
        return;
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        if (b >= counts.size()) b = counts.size() - 1;
        ++counts[b];
    }
    os.precision(17);
    for (int b = 0; b < bins; ++b)
        os << (lo + width * b) << '\t' << (b + 1 == bins ? hi : lo + width * (b + 1)) << '\t'
           << counts[static_cast<std::size_t>(b)] << '\n';
}

struct CommonOpts {
    std::string data_path;
    std::string prior_spec = "normal:0,1";
    double a = 0.0;
    std::string functional = "mean";
    double alpha = 0.05;
    std::int64_t boot = 1000;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    double stick_tol = 1e-8;
    std::string format = "json";
    int hist_bins = 30;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_functional = true) {
    cmd->add_option("--data", o.data_path, "headerless single-column CSV")->required();
    cmd->add_option("--prior", o.prior_spec,
                    "prior guess: normal:MU,SIGMA | uniform:L,U | exp:RATE | empirical:PATH");
    cmd->add_option("--a", o.a, "prior sample size a >= 0");
    if (with_functional)
        cmd->add_option("--functional", o.functional,
                        "mean | median | quantile:P | sd | mad | prob:L,U[;L,U...]");
    cmd->add_option("--boot", o.boot, "number of replicates");
    cmd->add_option("--seed", o.seed, "RNG seed (auto-generated and echoed if absent)");
    cmd->add_option("--threads", o.threads, "worker threads (0 = auto); never changes results");
    cmd->add_option("--stick-tol", o.stick_tol, "stick-breaking residual-mass tolerance");
    cmd->add_option("--format", o.format, "json | tsv-histogram")
        ->check(CLI::IsMember({"json", "tsv-histogram"}));
    cmd->add_option("--bins", o.hist_bins, "histogram bins for tsv-histogram");
}

json config_echo(const CommonOpts& o, std::uint64_t seed) {
    return json{{"data", o.data_path}, {"prior", o.prior_spec},   {"a", o.a},
                {"functional", o.functional}, {"alpha", o.alpha}, {"boot", o.boot},
                {"seed", seed},        {"threads", o.threads}};
}

bb::Scheme parse_scheme(const std::string& s) {
    if (s == "bb") return bb::Scheme::bb;
    if (s == "rubin") return bb::Scheme::rubin;
    if (s == "stick") return bb::Scheme::stick;
    throw InputError("unknown scheme '" + s + "'");
}

// Exact posterior moments of h(theta(F)) for the correction pairs worked out
// in closed form: (mean, identity) and (sd, square).
void fill_correction_moments(const bb::MixtureCdf& mix, const std::string& functional,
                             const std::string& h_name, std::optional<double>& nu0,
                             std::optional<double>& tau0) {
    if (functional == "mean" && h_name == "identity") {
        const auto m = bb::mean_posterior_moments(mix);
        if (!nu0) nu0 = m.nu0;
        if (!tau0) tau0 = std::sqrt(m.tau0_sq);
    } else if (functional == "sd" && h_name == "square") {
        if (!nu0) nu0 = bb::variance_posterior_expectation(mix);
    }
}

int cmd_interval(const CommonOpts& o, const std::string& scheme, const std::string& correct,
                 const std::string& h_name, std::optional<double> nu0,
                 std::optional<double> tau0) {
    const auto data = load_column(o.data_path);
    const bb::DirichletPrior prior(o.a, bb::parse_prior_spec(o.prior_spec));
    const auto f = parse_functional(o.functional);
    const std::uint64_t seed = resolve_seed(o.seed);
    const bb::EngineOptions opts{o.threads, o.stick_tol};
    const auto draws = bb::run_bootstrap(parse_scheme(scheme), f, prior, data, o.boot, seed, opts);

    if (o.format == "tsv-histogram") {
        emit_histogram(draws, o.hist_bins, std::cout);
        return 0;
    }

    bb::IntervalResult interval;
    if (correct == "none") {
        interval = bb::percentile_interval(draws, o.alpha);
    } else {
        const bb::MixtureCdf mix(prior, data);
        fill_correction_moments(mix, o.functional, h_name, nu0, tau0);
        if (!nu0)
            throw InputError("correction needs --nu0 (no closed form for functional '" +
                             o.functional + "' with h=" + h_name + ")");
        bb::CorrectionSpec spec{bb::HTransform::parse(h_name), *nu0, tau0};
        if (correct == "bias") {
            interval = bb::bias_correct(draws, spec, o.alpha);
        } else {
            if (!tau0) throw InputError("bias-variance correction needs --tau0");
            interval = bb::bias_variance_correct(draws, spec, o.alpha);
        }
    }

    json out{{"command", "interval"},
             {"config", config_echo(o, seed)},
             {"scheme", scheme},
             {"correction", correct},
             {"estimate", finite_or_string(interval.estimate)},
             {"interval",
              {{"lower", finite_or_string(interval.lower)},
               {"upper", finite_or_string(interval.upper)},
               {"level", interval.level},
               {"alpha", o.alpha},
               {"low_boot_warning", interval.low_boot_warning}}},
             {"draws", draw_summary(draws)},
             {"seed", seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_estimate(const CommonOpts& o, const std::string& scheme) {
    const auto data = load_column(o.data_path);
    const bb::DirichletPrior prior(o.a, bb::parse_prior_spec(o.prior_spec));
    const auto f = parse_functional(o.functional);
    const std::uint64_t seed = resolve_seed(o.seed);
    const bb::EngineOptions opts{o.threads, o.stick_tol};
    const auto draws = bb::run_bootstrap(parse_scheme(scheme), f, prior, data, o.boot, seed, opts);
    if (o.format == "tsv-histogram") {
        emit_histogram(draws, o.hist_bins, std::cout);
        return 0;
    }
    json out{{"command", "estimate"},
             {"config", config_echo(o, seed)},
             {"scheme", scheme},
             {"estimate", finite_or_string(draws.mean())},
             {"draws", draw_summary(draws)},
             {"seed", seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_band(const CommonOpts& o, std::optional<double> lo, std::optional<double> hi,
             int points) {
    const auto data = load_column(o.data_path);
    const bb::DirichletPrior prior(o.a, bb::parse_prior_spec(o.prior_spec));
    const bb::MixtureCdf mix(prior, data);
    bb::BandGrid grid = bb::default_band_grid(mix, points);
    if (lo) grid.lo = *lo;
    if (hi) grid.hi = *hi;
    const std::uint64_t seed = resolve_seed(o.seed);
    const auto band = bb::confidence_band(prior, data, o.alpha, grid, o.boot, seed,
                                          {o.threads, o.stick_tol});
    json out{{"command", "band"},
             {"config", config_echo(o, seed)},
             {"c", band.c},
             {"d", band.d},
             {"coverage", band.coverage},
             {"grid", band.grid},
             {"center", band.center},
             {"lower", band.lower},
             {"upper", band.upper},
             {"seed", seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_twosample(const CommonOpts& o, const std::string& data2_path,
                  const std::string& prior2_spec, double a2, const std::string& functional2,
                  bool paired) {
    const auto data1 = load_column(o.data_path);
    const auto data2 = load_column(data2_path);
    const bb::DirichletPrior prior1(o.a, bb::parse_prior_spec(o.prior_spec));
    const bb::DirichletPrior prior2(a2, bb::parse_prior_spec(prior2_spec));
    const auto f1 = parse_functional(o.functional);
    const auto f2 = parse_functional(functional2.empty() ? o.functional : functional2);
    const std::uint64_t seed = resolve_seed(o.seed);
    const auto draws = bb::two_sample_bb(f1, f2, prior1, data1, prior2, data2, o.boot, seed,
                                         paired, {o.threads, o.stick_tol});
    if (o.format == "tsv-histogram") {
        emit_histogram(draws, o.hist_bins, std::cout);
        return 0;
    }
    const auto interval = bb::percentile_interval(draws, o.alpha);
    json out{{"command", "twosample"},
             {"config", config_echo(o, seed)},
             {"data2", data2_path},
             {"prior2", prior2_spec},
             {"a2", a2},
             {"paired", paired},
             {"estimate", finite_or_string(interval.estimate)},
             {"interval",
              {{"lower", finite_or_string(interval.lower)},
               {"upper", finite_or_string(interval.upper)},
               {"level", interval.level},
               {"alpha", o.alpha},
               {"low_boot_warning", interval.low_boot_warning}}},
             {"draws", draw_summary(draws)},
             {"seed", seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_exact_prob(const std::string& data_path, const std::string& prior_spec, double a,
                   const std::string& set_spec) {
    const auto data = load_column(data_path);
    const bb::DirichletPrior prior(a, bb::parse_prior_spec(prior_spec));
    const auto A = parse_set(set_spec);
    const auto post = bb::prob_posterior(prior, data, A);
    const auto approx = bb::bb_prob_approx(prior, data, A);
    json out{{"command", "exact prob"},
             {"set", set_spec},
             {"a", a},
             {"prior", prior_spec},
             {"posterior",
              {{"alpha", post.alpha},
               {"beta", post.beta},
               {"mean", post.mean()},
               {"variance", post.variance()}}},
             {"bb_approx",
              {{"m", approx.lattice.m}, {"p", approx.p}, {"mean", approx.lattice.mean()}}}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_exact_median(const std::string& data_path, const std::string& prior_spec, double a,
                     int density_points) {
    const auto data = load_column(data_path);
    const bb::DirichletPrior prior(a, bb::parse_prior_spec(prior_spec));
    const auto post = bb::median_posterior(prior, data);
    json density = json::array();
    if (a > 0.0) {
        const auto& x = data.values();
        std::vector<double> bounds;
        bounds.push_back(std::min(prior.guess.inverse_cdf(1e-6), x.front()));
        bounds.insert(bounds.end(), x.begin(), x.end());
        bounds.push_back(std::max(prior.guess.inverse_cdf(1.0 - 1e-6), x.back()));
        for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
            const double lo = bounds[seg], hi = bounds[seg + 1];
            if (!(hi > lo)) continue;
            for (int i = 0; i < density_points; ++i) {
                const double t = lo + (hi - lo) * (i + 0.5) / density_points;
                density.push_back(json{{"t", t}, {"g", post.density(t)}});
            }
        }
    }
    json out{{"command", "exact median"},
             {"a", a},
             {"prior", prior_spec},
             {"atoms", post.atoms()},
             {"masses", post.masses()},
             {"atom_mass_total", post.atom_mass_total()},
             {"total_mass", post.total_mass()},
             {"density", density}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_eb_fit_a(const std::string& data_path, const std::string& prior_spec) {
    const auto data = load_column(data_path);
    const auto fit = bb::fit_a(data, bb::parse_prior_spec(prior_spec));
    json out{{"command", "eb fit-a"},
             {"prior", prior_spec},
             {"a", finite_or_string(fit.a)},
             {"discrepancy", fit.discrepancy},
             {"d_floor", fit.d_floor},
             {"clamped", fit.clamped}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_eb_fit_prior(const std::string& data_path, const std::string& family, double a) {
    const auto data = load_column(data_path);
    const bb::PriorFamily fam =
        family == "normal" ? bb::PriorFamily::normal : bb::PriorFamily::general;
    if (family != "normal" && family != "general")
        throw InputError("unknown family '" + family + "'");
    const auto fit = bb::fit_prior_params(data, fam, a);
    json out{{"command", "eb fit-prior"},
             {"family", family},
             {"a", a},
             {"mu0", fit.mu0},
             {"sigma0_sq", fit.sigma0_sq},
             {"overdetermined_warning", fit.overdetermined_warning}};
    if (fit.mu3_target) out["mu3_target"] = *fit.mu3_target;
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_regress(const std::string& data_path, bool add_intercept, const std::string& functional,
                const std::string& at_spec, double a, double alpha, std::int64_t boot,
                std::optional<std::uint64_t> seed_opt, int threads, const std::string& format,
                int bins) {
    const auto data = load_regression(data_path, add_intercept);
    const auto at = parse_point(at_spec);
    bb::RegressionFunctional f = [&] {
        if (functional.rfind("decile:", 0) == 0)
            return bb::RegressionFunctional::decile(at, std::stoi(functional.substr(7)));
        if (functional.rfind("proble:", 0) == 0)
            return bb::RegressionFunctional::prob_le(at, std::stod(functional.substr(7)));
        if (functional == "absdev") return bb::RegressionFunctional::abs_dev(at);
        throw InputError("unknown regression functional '" + functional + "'");
    }();
    const std::uint64_t seed = resolve_seed(seed_opt);
    const auto fit = bb::least_squares(data);
    const auto draws = bb::run_regression_bootstrap(data, f, a, boot, seed, {threads, 1e-8});
    if (format == "tsv-histogram") {
        emit_histogram(draws, bins, std::cout);
        return 0;
    }
    const auto interval = bb::percentile_interval(draws, alpha);
    json out{{"command", "regress"},
             {"config",
              {{"data", data_path}, {"functional", functional}, {"at", at_spec},
               {"a", a}, {"alpha", alpha}, {"boot", boot}, {"seed", seed},
               {"add_intercept", add_intercept}}},
             {"fit",
              {{"beta", fit.beta}, {"sigma", fit.sigma}, {"condition", fit.condition},
               {"tied_responses", data.tied_responses()}}},
             {"estimate", finite_or_string(interval.estimate)},
             {"interval",
              {{"lower", finite_or_string(interval.lower)},
               {"upper", finite_or_string(interval.upper)},
               {"level", interval.level},
               {"alpha", alpha},
               {"low_boot_warning", interval.low_boot_warning}}},
             {"draws", draw_summary(draws)},
             {"seed", seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_survival(const std::string& data_path, const std::string& scheme_name,
                 const std::string& functional, const std::string& prior_spec,
                 std::optional<double> c0, std::optional<double> a, int grid_per_gap,
                 double alpha, std::int64_t boot, std::optional<std::uint64_t> seed_opt,
                 int threads, const std::string& format, int bins) {
    const auto data = load_survival(data_path);
    bb::SurvivalScheme scheme;
    if (scheme_name == "weird") scheme = bb::SurvivalScheme::weird;
    else if (scheme_name == "beta") scheme = bb::SurvivalScheme::beta;
    else if (scheme_name == "weird-bb") scheme = bb::SurvivalScheme::weird_bb;
    else if (scheme_name == "resample") scheme = bb::SurvivalScheme::resample;
    else throw InputError("unknown survival scheme '" + scheme_name + "'");

    bb::HazardFunctional f = [&] {
        if (functional == "median") return bb::HazardFunctional::median_survival();
        if (functional.rfind("F:", 0) == 0)
            return bb::HazardFunctional::cdf_at(std::stod(functional.substr(2)));
        if (functional.rfind("A:", 0) == 0)
            return bb::HazardFunctional::cumhaz_at(std::stod(functional.substr(2)));
        throw InputError("unknown survival functional '" + functional + "'");
    }();

    std::optional<bb::BetaProcessPrior> prior;
    if (scheme != bb::SurvivalScheme::weird) {
        const auto guess = bb::parse_prior_spec(prior_spec);
        if (c0 && a) throw InputError("give either --c0 or --a, not both");
        if (c0)
            prior = bb::BetaProcessPrior::constant(*c0, guess, grid_per_gap);
        else
            prior = bb::BetaProcessPrior::dirichlet_link(a.value_or(0.0), guess, grid_per_gap);
    }
    const std::uint64_t seed = resolve_seed(seed_opt);
    const auto draws =
        bb::run_survival_bootstrap(scheme, f, prior, data, boot, seed, {threads, 1e-8});
    if (format == "tsv-histogram") {
        emit_histogram(draws, bins, std::cout);
        return 0;
    }
    const auto interval = bb::percentile_interval(draws, alpha);
    json out{{"command", "survival"},
             {"config",
              {{"data", data_path}, {"scheme", scheme_name}, {"functional", functional},
               {"prior", prior_spec}, {"c0", c0 ? json(*c0) : json()},
               {"a", a ? json(*a) : json()}, {"grid_per_gap", grid_per_gap},
               {"alpha", alpha}, {"boot", boot}, {"seed", seed}}},
             {"estimate", finite_or_string(interval.estimate)},
             {"interval",
              {{"lower", finite_or_string(interval.lower)},
               {"upper", finite_or_string(interval.upper)},
               {"level", interval.level},
               {"alpha", alpha},
               {"low_boot_warning", interval.low_boot_warning}}},
             {"draws", draw_summary(draws)},
             {"seed", seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bb: informative Bayesian bootstrap over Dirichlet-process priors"};
    app.require_subcommand(1);

    // interval
    CommonOpts io;
    std::string i_scheme = "bb", i_correct = "none", i_h = "identity";
    std::optional<double> i_nu0, i_tau0;
    auto* interval = app.add_subcommand("interval", "BB percentile interval for a functional");
    add_common(interval, io);
    interval->add_option("--alpha", io.alpha, "tail level (interval level 1-2*alpha)");
    interval->add_option("--scheme", i_scheme, "bb | rubin | stick")
        ->check(CLI::IsMember({"bb", "rubin", "stick"}));
    interval->add_option("--correct", i_correct, "none | bias | bias-variance")
        ->check(CLI::IsMember({"none", "bias", "bias-variance"}));
    interval->add_option("--h", i_h, "identity | square | log")
        ->check(CLI::IsMember({"identity", "square", "log"}));
    interval->add_option("--nu0", i_nu0, "known posterior mean of h(theta)");
    interval->add_option("--tau0", i_tau0, "known posterior SD of h(theta)");

    // estimate
    CommonOpts eo;
    eo.boot = 100; // averages need far fewer replicates than tail quantiles
    std::string e_scheme = "bb";
    auto* estimate = app.add_subcommand("estimate", "BB point estimate of a functional");
    add_common(estimate, eo);
    estimate->add_option("--scheme", e_scheme, "bb | rubin | stick")
        ->check(CLI::IsMember({"bb", "rubin", "stick"}));

    // band
    CommonOpts bo;
    std::optional<double> b_lo, b_hi;
    int b_points = 101;
    auto* band = app.add_subcommand("band", "simultaneous confidence band for F");
    add_common(band, bo, false);
    band->add_option("--alpha", bo.alpha, "band level 1-2*alpha");
    band->add_option("--grid-lo", b_lo, "grid lower end (default: 5th pct of F_{n,B})");
    band->add_option("--grid-hi", b_hi, "grid upper end (default: 95th pct of F_{n,B})");
    band->add_option("--grid-points", b_points, "grid size");

    // twosample
    CommonOpts to;
    std::string t_data2, t_prior2 = "normal:0,1", t_f2;
    double t_a2 = 0.0;
    bool t_paired = false;
    auto* twosample = app.add_subcommand("twosample", "BB difference of two functionals");
    add_common(twosample, to);
    twosample->add_option("--alpha", to.alpha, "tail level");
    twosample->add_option("--data2", t_data2, "second sample CSV")->required();
    twosample->add_option("--prior2", t_prior2, "second sample prior spec");
    twosample->add_option("--a2", t_a2, "second sample prior strength");
    twosample->add_option("--functional2", t_f2, "second functional (defaults to --functional)");
    twosample->add_flag("--paired", t_paired, "index-couple the two resamples per replicate");

    // exact prob | median
    auto* exact = app.add_subcommand("exact", "closed-form posteriors");
    exact->require_subcommand(1);
    std::string xp_data, xp_prior = "normal:0,1", xp_set = "0,1";
    double xp_a = 0.0;
    auto* exact_prob = exact->add_subcommand("prob", "Beta posterior of F(A)");
    exact_prob->add_option("--data", xp_data)->required();
    exact_prob->add_option("--prior", xp_prior);
    exact_prob->add_option("--a", xp_a);
    exact_prob->add_option("--set", xp_set, "interval union L,U[;L,U...] ((L,U] pieces)");
    std::string xm_data, xm_prior = "normal:0,1";
    double xm_a = 0.0;
    int xm_points = 50;
    auto* exact_median = exact->add_subcommand("median", "posterior atoms/density of the median");
    exact_median->add_option("--data", xm_data)->required();
    exact_median->add_option("--prior", xm_prior);
    exact_median->add_option("--a", xm_a);
    exact_median->add_option("--density-points", xm_points, "density samples per gap");

    // eb fit-a | fit-prior
    auto* eb = app.add_subcommand("eb", "empirical Bayes fitting");
    eb->require_subcommand(1);
    std::string ea_data, ea_prior = "normal:0,1";
    auto* eb_fit_a = eb->add_subcommand("fit-a", "fit the prior strength a");
    eb_fit_a->add_option("--data", ea_data)->required();
    eb_fit_a->add_option("--prior", ea_prior);
    std::string ep_data, ep_family = "normal";
    double ep_a = 1.0;
    auto* eb_fit_prior = eb->add_subcommand("fit-prior", "fit prior-guess parameters");
    eb_fit_prior->add_option("--data", ep_data)->required();
    eb_fit_prior->add_option("--family", ep_family, "normal | general");
    eb_fit_prior->add_option("--a", ep_a, "prior strength (a > 0)");

    // regress
    std::string r_data, r_functional = "decile:5", r_at = "1";
    bool r_intercept = false;
    double r_a = 0.0, r_alpha = 0.05;
    std::int64_t r_boot = 1000;
    std::optional<std::uint64_t> r_seed;
    int r_threads = 0, r_bins = 30;
    std::string r_format = "json";
    auto* regress = app.add_subcommand("regress", "semiparametric regression BB");
    regress->add_option("--data", r_data, "CSV rows y,x1,...,xp")->required();
    regress->add_flag("--add-intercept", r_intercept, "prepend a column of ones");
    regress->add_option("--functional", r_functional, "decile:J | proble:Y | absdev");
    regress->add_option("--at", r_at, "covariate point x1,...,xp");
    regress->add_option("--a", r_a, "residual prior strength (0 = vague scheme)");
    regress->add_option("--alpha", r_alpha);
    regress->add_option("--boot", r_boot);
    regress->add_option("--seed", r_seed);
    regress->add_option("--threads", r_threads);
    regress->add_option("--format", r_format)->check(CLI::IsMember({"json", "tsv-histogram"}));
    regress->add_option("--bins", r_bins);

    // survival
    std::string s_data, s_scheme = "weird", s_functional = "median", s_prior = "exp:1";
    std::optional<double> s_c0, s_a;
    int s_grid = 20, s_threads = 0, s_bins = 30;
    double s_alpha = 0.05;
    std::int64_t s_boot = 1000;
    std::optional<std::uint64_t> s_seed;
    std::string s_format = "json";
    auto* survival = app.add_subcommand("survival", "censored-data bootstrap schemes");
    survival->add_option("--data", s_data, "CSV rows time,event(0/1)")->required();
    survival->add_option("--scheme", s_scheme, "weird | beta | weird-bb | resample")
        ->check(CLI::IsMember({"weird", "beta", "weird-bb", "resample"}));
    survival->add_option("--functional", s_functional, "F:t0 | A:t0 | median");
    survival->add_option("--prior", s_prior, "lifetime prior guess spec");
    survival->add_option("--c0", s_c0, "constant Beta-process concentration");
    survival->add_option("--a", s_a, "Dirichlet-link strength: c(s) = a F0[s,inf)");
    survival->add_option("--grid-per-gap", s_grid, "cells per inter-event gap");
    survival->add_option("--alpha", s_alpha);
    survival->add_option("--boot", s_boot);
    survival->add_option("--seed", s_seed);
    survival->add_option("--threads", s_threads);
    survival->add_option("--format", s_format)->check(CLI::IsMember({"json", "tsv-histogram"}));
    survival->add_option("--bins", s_bins);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitParse;
    }

    try {
        if (interval->parsed())
            return cmd_interval(io, i_scheme, i_correct, i_h, i_nu0, i_tau0);
        if (estimate->parsed()) return cmd_estimate(eo, e_scheme);
        if (band->parsed()) return cmd_band(bo, b_lo, b_hi, b_points);
        if (twosample->parsed())
            return cmd_twosample(to, t_data2, t_prior2, t_a2, t_f2, t_paired);
        if (exact_prob->parsed()) return cmd_exact_prob(xp_data, xp_prior, xp_a, xp_set);
        if (exact_median->parsed()) return cmd_exact_median(xm_data, xm_prior, xm_a, xm_points);
        if (eb_fit_a->parsed()) return cmd_eb_fit_a(ea_data, ea_prior);
        if (eb_fit_prior->parsed()) return cmd_eb_fit_prior(ep_data, ep_family, ep_a);
        if (regress->parsed())
            return cmd_regress(r_data, r_intercept, r_functional, r_at, r_a, r_alpha, r_boot,
                               r_seed, r_threads, r_format, r_bins);
        if (survival->parsed())
            return cmd_survival(s_data, s_scheme, s_functional, s_prior, s_c0, s_a, s_grid,
                                s_alpha, s_boot, s_seed, s_threads, s_format, s_bins);
    } catch (const InputError& e) {
        std::cerr << "bb: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "bb: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitParse;
}
