#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bb/cdf_model.hpp"
#include "bb/exact.hpp"
#include "bb/prior.hpp"

using nlohmann::json;

namespace {

struct RunResult {
    int status = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(BB_CLI_PATH) + " " + args + " 2>/dev/null";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int rc = pclose(pipe);
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

std::filesystem::path write_temp(const std::string& name, const std::vector<std::string>& lines) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    for (const auto& line : lines) out << line << '\n';
    return path;
}

std::filesystem::path column_file() {
    static const auto path = write_temp(
        "bb_cli_data.csv",
        {"0.12", "-0.55", "1.4", "0.33", "-1.9", "0.77", "2.1", "-0.02", "0.5", "-0.8"});
    return path;
}

} // namespace

TEST_CASE("cli determinism: identical seed gives byte-identical output") {
    const std::string base = "interval --data " + column_file().string() +
                             " --prior normal:0,1 --a 2 --functional mean --boot 400 "
                             "--alpha 0.05 --seed 7";
    const auto r1 = run_cli(base);
    const auto r2 = run_cli(base);
    REQUIRE(r1.status == 0);
    CHECK(r1.out == r2.out);

    // worker count cannot change the bytes
    const auto t1 = run_cli(base + " --threads 1");
    const auto t4 = run_cli(base + " --threads 4");
    CHECK(t1.out == t4.out);
    CHECK(t1.out == r1.out);
}

TEST_CASE("cli interval output carries the documented fields") {
    const auto r = run_cli("interval --data " + column_file().string() +
                           " --prior normal:0,1 --a 1.5 --functional median --boot 300 "
                           "--seed 11");
    REQUIRE(r.status == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("command") == "interval");
    CHECK(doc.at("seed") == 11);
    CHECK(doc.at("interval").at("lower").get<double>() <=
          doc.at("interval").at("upper").get<double>());
    CHECK(doc.at("draws").at("count") == 300);
    CHECK(doc.at("config").at("a") == 1.5);
    CHECK(doc.at("draws").at("quantiles").contains("0.5"));
}

TEST_CASE("cli exact prob is a thin adapter over prob_posterior") {
    const auto r = run_cli("exact prob --data " + column_file().string() +
                           " --prior normal:0,1 --a 4 --set 0,1");
    REQUIRE(r.status == 0);
    const json doc = json::parse(r.out);

    std::vector<double> values;
    {
        std::ifstream in(column_file());
        double x;
        while (in >> x) values.push_back(x);
    }
    const bb::DataSample data(values);
    const bb::DirichletPrior prior(4.0, bb::PriorGuess::normal(0, 1));
    const auto post = bb::prob_posterior(prior, data, bb::IntervalUnion{{0.0, 1.0}});
    CHECK(doc.at("posterior").at("alpha").get<double>() == post.alpha);
    CHECK(doc.at("posterior").at("beta").get<double>() == post.beta);
    CHECK(doc.at("posterior").at("mean").get<double>() == post.mean());
}

TEST_CASE("cli histogram bins sum to boot") {
    const auto r = run_cli("interval --data " + column_file().string() +
                           " --a 0 --functional mean --boot 500 --seed 3 "
                           "--format tsv-histogram --bins 24");
    REQUIRE(r.status == 0);
    std::istringstream lines(r.out);
    std::string line;
    long long total = 0;
    int rows = 0;
    while (std::getline(lines, line)) {
        double lo, hi;
        long long count;
        REQUIRE(std::sscanf(line.c_str(), "%lf\t%lf\t%lld", &lo, &hi, &count) == 3);
        REQUIRE(lo <= hi);
        total += count;
        ++rows;
    }
    CHECK(rows == 24);
    CHECK(total == 500);
}

TEST_CASE("cli estimate defaults to boot = 100") {
    const auto r = run_cli("estimate --data " + column_file().string() +
                           " --a 0 --functional mean --seed 5");
    REQUIRE(r.status == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("draws").at("count") == 100);
}

TEST_CASE("cli seeds are auto-generated and echoed when absent") {
    const auto r = run_cli("estimate --data " + column_file().string() +
                           " --a 0 --functional mean --boot 50");
    REQUIRE(r.status == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("seed").is_number());
}

TEST_CASE("cli error taxonomy") {
    SECTION("unknown flags and bad specs exit 2") {
        CHECK(run_cli("interval --data " + column_file().string() + " --no-such-flag").status ==
              2);
        CHECK(run_cli("interval --data " + column_file().string() + " --prior weird:1 --seed 1")
                  .status == 2);
        CHECK(run_cli("interval --data /no/such/file.csv --seed 1").status == 2);
        CHECK(run_cli("interval --data " + column_file().string() +
                      " --functional nosuch --seed 1")
                  .status == 2);
    }

    SECTION("module numeric errors exit 3") {
        // a = 0 with a set containing no data point: degenerate posterior
        CHECK(run_cli("exact prob --data " + column_file().string() +
                      " --a 0 --set 100,200")
                  .status == 3);
        // negative prior strength is a library domain error
        CHECK(run_cli("interval --data " + column_file().string() + " --a -3 --seed 1")
                  .status == 3);
    }
}

TEST_CASE("cli survival and regress smoke runs") {
    const auto surv = write_temp("bb_cli_surv.csv", {"1.2,1", "0.7,0", "2.5,1", "0.9,1",
                                                     "1.7,0", "3.1,1", "0.4,1", "2.2,1"});
    const auto r1 = run_cli("survival --data " + surv.string() +
                            " --scheme weird --functional A:1.5 --boot 200 --seed 9");
    REQUIRE(r1.status == 0);
    CHECK(json::parse(r1.out).at("draws").at("count") == 200);

    const auto r2 = run_cli("survival --data " + surv.string() +
                            " --scheme weird-bb --functional F:1.5 --prior exp:0.8 --a 2 "
                            "--boot 200 --seed 9");
    REQUIRE(r2.status == 0);

    const auto reg = write_temp("bb_cli_reg.csv", {"1.1,0.0", "2.9,1.0", "5.2,2.0", "6.8,3.0",
                                                   "9.1,4.0", "11.2,5.0"});
    const auto r3 = run_cli("regress --data " + reg.string() +
                            " --add-intercept --functional decile:5 --at 1,2 --boot 200 "
                            "--seed 13");
    REQUIRE(r3.status == 0);
    const json doc = json::parse(r3.out);
    CHECK(doc.at("fit").at("beta").size() == 2);

    const auto r4 = run_cli("eb fit-a --data " + column_file().string() + " --prior normal:0,1");
    REQUIRE(r4.status == 0);
    CHECK(json::parse(r4.out).contains("discrepancy"));

    const auto r5 = run_cli("exact median --data " + column_file().string() +
                            " --prior normal:0,1 --a 1 --density-points 10");
    REQUIRE(r5.status == 0);
    CHECK(json::parse(r5.out).at("atoms").size() == 10);
}
