#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "viana/config.hpp"
#include "viana/errors.hpp"
#include "viana/io.hpp"
#include "viana/runner.hpp"

using namespace viana;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir(const std::string& leaf) {
    const fs::path p = fs::temp_directory_path() / "viana_tests" / leaf;
    fs::create_directories(p);
    return p.string();
}

const char* kMinimalF1 = R"cfg([map]
kind = f1

[run]
seed = 7
)cfg";

}  // namespace

TEST_CASE("minimal config resolves to the documented defaults") {
    const ExperimentConfig cfg = parse_config(kMinimalF1);
    CHECK(cfg.map.kind == MapKind::F1);
    CHECK(cfg.run.seed == 7);
    CHECK(cfg.run.ensemble_size == 100000);
    CHECK(cfg.run.burn_in == 10000);
    CHECK(cfg.stats.kappa == 0.1);

    Experiment exp(cfg);
    CHECK(exp.spec().beta == 2.0);
    CHECK(exp.spec().alpha == 0.01);
    CHECK(exp.spec().a == doctest::Approx(1.5436890126920764));
}

TEST_CASE("config rejections name the offending constraint and line") {
    try {
        parse_config("[map]\nkind = f1\nbeta = 0.5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
        CHECK(std::string(e.what()).find("> 1") != std::string::npos);
    }

    try {
        parse_config("[map]\nkind = f1\n\n[stats]\nkappa = 0.3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 5);
        CHECK(std::string(e.what()).find("1/4") != std::string::npos);
    }

    try {
        parse_config("[map]\nkind = f1\nwhatever = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("[orbit]\nfoo = 1\n"), ConfigError);        // unknown section
    CHECK_THROWS_AS(parse_config("kind = f1\n"), ConfigError);               // key before section
    CHECK_THROWS_AS(parse_config("[map]\nkind = f3\n"), ConfigError);        // unknown kind
    CHECK_THROWS_AS(parse_config("[run]\nseed = 1\n"), ConfigError);         // kind missing
    CHECK_THROWS_AS(parse_config("[map]\nkind = f1\nb = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\nkind = f2\nbeta = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\nkind = f1\n[run]\nn_list = 5,5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[map]\nkind = f1\nalpha = zero\n"), ConfigError);
}

TEST_CASE("csv writers round-trip exactly") {
    TailCurve c;
    c.kind = TailKind::Joint;
    c.n_values = {25, 50, 400};
    c.p_values = {0.421870000000001, 1.0 / 3.0, 3.0e-05};
    c.counts = {8437, 6667, 3};
    c.ensemble_size = 20000;
    const std::string text = tails_csv({c});
    const std::vector<TailCurve> back = parse_tails_csv(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].kind == TailKind::Joint);
    CHECK(back[0].n_values == c.n_values);
    CHECK(back[0].p_values == c.p_values);
    CHECK(back[0].counts == c.counts);
    CHECK(back[0].ensemble_size == c.ensemble_size);

    const std::vector<CorrPoint> pts{{1, 0.123456789012345678, 1e-300}, {50, 0.25, 0.5}};
    const auto pts_back = parse_correlation_csv(correlation_csv(pts));
    REQUIRE(pts_back.size() == 2);
    CHECK(pts_back[0].corr == pts[0].corr);
    CHECK(pts_back[0].stderr_ == pts[0].stderr_);

    const std::vector<LdPoint> lds{{10, 0.1, 0.01}, {100, 0.0, 0.0}};
    const auto lds_back = parse_ld_csv(ld_csv(lds));
    CHECK(lds_back[1].ld == 0.0);

    std::vector<double> edges{0.0, 0.5, 1.0};
    std::vector<double> values{1.1708203932499369, 0.7236067977499789};
    std::vector<double> e2, v2;
    parse_density_csv(density_csv(edges, values), e2, v2);
    CHECK(e2 == edges);
    CHECK(v2 == values);
}

TEST_CASE("runner writes byte-identical outputs for identical configs") {
    // explicit c/epsilon/delta skip the calibration passes
    const std::string text = R"cfg([map]
kind = f1

[run]
seed = 11
ensemble_size = 4000
burn_in = 500
n_list = 25,50,100

[stats]
c = 0.22
epsilon = 0.11
delta = 0.006
)cfg";
    const std::string d1 = scratch_dir("det1");
    const std::string d2 = scratch_dir("det2");
    const std::string d4 = scratch_dir("det4");

    ExperimentConfig c1 = parse_config(text);
    c1.run.threads = 1;
    Experiment e1(c1);
    REQUIRE(run_experiment(e1, "tails", d1).exit_code == 0);

    ExperimentConfig c2 = parse_config(text);
    c2.run.threads = 2;
    Experiment e2(c2);
    REQUIRE(run_experiment(e2, "tails", d2).exit_code == 0);

    ExperimentConfig c4 = parse_config(text);
    c4.run.threads = 4;
    Experiment e4(c4);
    REQUIRE(run_experiment(e4, "tails", d4).exit_code == 0);

    const std::string body1 = read_text_file(d1 + "/tails.csv");
    CHECK(body1 == read_text_file(d2 + "/tails.csv"));
    CHECK(body1 == read_text_file(d4 + "/tails.csv"));

    // manifest carries the config hash and seed and accounts for every output
    const std::string man = read_text_file(d1 + "/manifest.txt");
    const auto hpos = man.find("config_hash=");
    REQUIRE(hpos != std::string::npos);
    const std::string hash = man.substr(hpos + 12, 16);
    CHECK(man.find("seed=11") != std::string::npos);
    CHECK(man.find("status=ok") != std::string::npos);
    CHECK(man.find("output=tails.csv") != std::string::npos);
    // each output file names the config hash it came from
    CHECK(body1.rfind("# config=" + hash, 0) == 0);
}

TEST_CASE("fit command inverts a synthetic tail file end to end") {
    const std::string dir = scratch_dir("fit");
    TailCurve c;
    c.kind = TailKind::Joint;
    c.ensemble_size = 1000000;
    for (long n = 1; n <= 30; ++n) {
        const double p = std::exp(-2.0 * std::cbrt(static_cast<double>(n)));
        c.n_values.push_back(n);
        c.p_values.push_back(p);
        c.counts.push_back(static_cast<long>(p * 1e6));
    }
    write_text_file(dir + "/tails.csv", tails_csv({c}));

    ExperimentConfig cfg = parse_config(kMinimalF1);
    Experiment exp(cfg);
    const RunResult res = run_experiment(exp, "fit", dir);
    REQUIRE(res.exit_code == 0);
    const std::string fit = read_text_file(dir + "/fit.txt");
    CHECK(fit.find("kind=joint") != std::string::npos);
    const auto zpos = fit.find("zeta_hat=");
    REQUIRE(zpos != std::string::npos);
    const double zeta = std::stod(fit.substr(zpos + 9));
    CHECK(zeta == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(res.summary.find("zeta_hat") != std::string::npos);
}

TEST_CASE("report draws decay plots with fitted envelopes") {
    const std::string dir = scratch_dir("report");
    std::vector<CorrPoint> pts;
    for (long n : {1, 2, 5, 10, 20, 50})
        pts.push_back({n, 0.5 * std::exp(-0.8 * std::cbrt(static_cast<double>(n))), 1e-4});
    write_text_file(dir + "/correlation.csv", correlation_csv(pts));

    ExperimentConfig cfg = parse_config(kMinimalF1);
    Experiment exp(cfg);
    const RunResult res = run_experiment(exp, "report", dir);
    REQUIRE(res.exit_code == 0);
    const std::string svg = read_text_file(dir + "/correlation.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("envelope") != std::string::npos);

    // the envelope samples equal the fitted closed form exactly
    std::vector<long> ns;
    std::vector<double> ps;
    for (const CorrPoint& p : pts) {
        ns.push_back(p.n);
        ps.push_back(p.corr);
    }
    const auto [env_c, env_tau] = fit_envelope(ns, ps, 1.0 / 3.0);
    const PlotSeries env = envelope_series("e", ns, env_c, env_tau, 1.0 / 3.0);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double expect =
            env_c * std::exp(-env_tau * std::pow(static_cast<double>(ns[i]), 1.0 / 3.0));
        REQUIRE(env.y[i] == expect);
    }

    // no results at all is a usage error
    const std::string empty = scratch_dir("empty");
    const RunResult bad = run_experiment(exp, "report", empty);
    CHECK(bad.exit_code == kExitConfig);
}

TEST_CASE("unknown command and error manifests") {
    ExperimentConfig cfg = parse_config(kMinimalF1);
    Experiment exp(cfg);
    const std::string dir = scratch_dir("unknown");
    const RunResult res = run_experiment(exp, "frobnicate", dir);
    CHECK(res.exit_code == kExitConfig);
    const std::string man = read_text_file(dir + "/manifest.txt");
    CHECK(man.find("status=error") != std::string::npos);
    CHECK(man.find("error=") != std::string::npos);
}

TEST_CASE("format_double survives round trips") {
    for (double v : {0.0, 1.0, -1.5436890126920764, 3e-300, 0.1, 1.0 / 3.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(fnv1a64("abc") != fnv1a64("abd"));
}
