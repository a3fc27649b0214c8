#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "whmc/experiment.hpp"

using namespace whmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "whmc_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + WHMC_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Wall-clock fields vary between runs; strip them before comparing.
std::string drop_last_column(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        out << (pos == std::string::npos ? line : line.substr(0, pos)) << '\n';
    }
    return out.str();
}

std::string canonical_report(const std::string& report_json) {
    nlohmann::json j = nlohmann::json::parse(report_json);
    j.erase("timestamp");
    j.erase("wall_ms");
    if (j.contains("levels"))
        for (auto& l : j.at("levels")) l.erase("wall_ms");
    return j.dump();
}

const char* kSmallBmEstimate = R"({
  "model": {"type": "brownian", "mu": 0.0, "sigma": 1.0},
  "t": 1.0,
  "horizon": "gamma",
  "payoff": {"type": "barrier_put", "strike": 1.2, "barrier": 0.2, "x0": 0.0},
  "plan": {"n0": 8, "max_level": 1, "samples": [4000, 2000]},
  "run": {"seed": 5, "threads": 1}
})";

} // namespace

TEST_CASE("config parsing fills every field") {
    const std::string text = R"({
      "model": {"type": "beta", "a": 0.2, "sigma": 0.5,
                "c1": 1.5, "a1": 2.0, "b1": 1.25, "lambda1": 0.8,
                "c2": 0.5, "a2": 1.0, "b2": 2.0, "lambda2": 2.2},
      "t": 2.5,
      "horizon": "gamma",
      "payoff": {"type": "barrier_put", "strike": 1.3, "barrier": 0.4, "x0": -0.1},
      "plan": {"n0": 32, "max_level": 3, "samples": [100, 50, 25, 12],
               "target_stat_error": 0.01, "pilot_samples": 500},
      "run": {"seed": 42, "replica": 3, "threads": 2, "bias_alpha": 0.5,
              "completion": "direct", "truncation": 80,
              "truncation_check": false, "truncation_tol": 0.05}
    })";
    const auto cfg = experiment::parse_config(text);
    CHECK_FALSE(cfg.model.is_brownian());
    const auto& p = cfg.model.beta_params();
    CHECK(p.a == 0.2);
    CHECK(p.sigma == 0.5);
    CHECK(p.c1 == 1.5);
    CHECK(p.a1 == 2.0);
    CHECK(p.b1 == 1.25);
    CHECK(p.lambda1 == 0.8);
    CHECK(p.c2 == 0.5);
    CHECK(p.lambda2 == 2.2);
    CHECK(cfg.t == 2.5);
    CHECK(cfg.payoff.is_barrier());
    CHECK(cfg.payoff.barrier_spec().strike == 1.3);
    CHECK(cfg.payoff.barrier_spec().x0 == -0.1);
    CHECK(cfg.plan.n0 == 32);
    CHECK(cfg.plan.max_level == 3);
    CHECK(cfg.plan.samples == std::vector<std::int64_t>{100, 50, 25, 12});
    CHECK(cfg.plan.target_stat_error == 0.01);
    CHECK(cfg.plan.pilot_samples == 500);
    CHECK(cfg.run.seed == 42);
    CHECK(cfg.run.replica == 3);
    CHECK(cfg.run.threads == 2);
    CHECK(cfg.run.bias_alpha == 0.5);
    CHECK(cfg.run.completion == coupling::Completion::direct_coarse);
    CHECK(cfg.run.factor.truncation == 80);
    CHECK_FALSE(cfg.run.factor.convergence_check);
    CHECK(cfg.run.factor.convergence_tol == 0.05);
}

TEST_CASE("config parsing applies defaults") {
    const auto cfg = experiment::parse_config(
        R"({"model": {"type": "brownian"}, "payoff": {"type": "lipschitz"}})");
    CHECK(cfg.model.is_brownian());
    CHECK(cfg.model.bm().mu == 0.0);
    CHECK(cfg.model.bm().sigma == 1.0);
    CHECK(cfg.t == 1.0);
    CHECK(cfg.run.horizon == estimators::Horizon::gamma_like);
    CHECK_FALSE(cfg.payoff.is_barrier());
    CHECK(cfg.plan.n0 == 16);
    CHECK(cfg.plan.max_level == 0);
    CHECK(cfg.run.seed == 1);
    CHECK(cfg.run.threads == 1);
    CHECK(cfg.run.completion == coupling::Completion::extend_fine);
    CHECK(cfg.run.factor.truncation == 50);
    CHECK(cfg.run.factor.convergence_check);
}

TEST_CASE("config parsing rejects malformed input") {
    using experiment::parse_config;
    CHECK_THROWS_AS(parse_config("not json"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "cauchy"},
        "payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian", "nu": 1},
        "payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"}, "bogus": 1,
        "payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"}, "t": -2,
        "payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"}, "t": "soon",
        "payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"}, "horizon": "never",
        "payoff": {"type": "lipschitz"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz", "kind": "cubic"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "barrier_put", "strike": -1}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "plan": {"n0": 0}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "plan": {"samples": 7}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"threads": 0}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"threads": 65}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"seed": "one"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"bias_alpha": 0}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"completion": "retcon"}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"truncation": 0}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "brownian"},
        "payoff": {"type": "lipschitz"}, "run": {"truncation_check": 1}})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"model": {"type": "beta", "lambda1": 3.5},
        "payoff": {"type": "lipschitz"}})"), config_error);
}

TEST_CASE("canonical config dump and hash are stable") {
    const auto a = experiment::parse_config(kSmallBmEstimate);
    const auto b = experiment::parse_config(kSmallBmEstimate);
    CHECK(experiment::canonical_config_json(a) == experiment::canonical_config_json(b));
    CHECK(experiment::config_hash(a) == experiment::config_hash(b));

    auto c = b;
    c.run.seed = 6;
    CHECK(experiment::config_hash(a) != experiment::config_hash(c));
    auto d = b;
    d.t = 1.5;
    CHECK(experiment::config_hash(a) != experiment::config_hash(d));
}

TEST_CASE("estimate artifacts are reproducible and consistent") {
    const auto cfg = experiment::parse_config(kSmallBmEstimate);
    const auto a = experiment::run_estimate(cfg);
    const auto b = experiment::run_estimate(cfg);

    CHECK(drop_last_column(a.levels_csv) == drop_last_column(b.levels_csv));
    CHECK(canonical_report(a.report_json) == canonical_report(b.report_json));
    CHECK(a.levels_csv.rfind("level,n,M,mean,var,cost_units,wall_ms\n", 0) == 0);

    const nlohmann::json rep = nlohmann::json::parse(a.report_json);
    CHECK(rep.at("subcommand") == "estimate");
    CHECK(rep.at("levels").size() == 2);
    double sum = 0.0;
    for (const auto& l : rep.at("levels")) sum += l.at("mean").get<double>();
    CHECK(rep.at("estimate").get<double>() == doctest::Approx(sum).epsilon(1e-12));
    CHECK(rep.at("config_hash").get<std::string>().size() == 16);

    // Three data rows: header plus one line per level.
    CHECK(std::count(a.levels_csv.begin(), a.levels_csv.end(), '\n') == 3);
}

TEST_CASE("validate artifacts pass for exact models") {
    // Gamma horizon, brownian.
    auto cfg = experiment::parse_config(R"({
      "model": {"type": "brownian", "mu": 0.2, "sigma": 1.0},
      "payoff": {"type": "lipschitz"},
      "plan": {"n0": 16},
      "run": {"seed": 3}
    })");
    const auto bm_gamma = experiment::run_validate(cfg);
    CHECK(bm_gamma.all_passed);
    CHECK(bm_gamma.diagnostics_csv.rfind("check,expected,observed,metric,threshold,pass\n", 0) ==
          0);
    const nlohmann::json rep = nlohmann::json::parse(bm_gamma.report_json);
    CHECK(rep.at("subcommand") == "validate");
    CHECK(rep.at("failures").get<int>() == 0);
    CHECK(rep.at("checks").get<int>() >= 8);

    // Deterministic horizon, brownian.
    auto det = experiment::parse_config(R"({
      "model": {"type": "brownian", "mu": 0.3, "sigma": 0.8},
      "horizon": "deterministic",
      "payoff": {"type": "lipschitz"},
      "plan": {"n0": 12},
      "run": {"seed": 4}
    })");
    CHECK(experiment::run_validate(det).all_passed);

    // Gamma horizon, beta class.
    auto beta = experiment::parse_config(R"({
      "model": {"type": "beta"},
      "payoff": {"type": "lipschitz"},
      "plan": {"n0": 16},
      "run": {"seed": 5}
    })");
    CHECK(experiment::run_validate(beta).all_passed);

    // Deterministic horizon needs brownian.
    auto bad = experiment::parse_config(R"({
      "model": {"type": "beta"},
      "horizon": "deterministic",
      "payoff": {"type": "lipschitz"}
    })");
    CHECK_THROWS_AS(experiment::run_validate(bad), config_error);
}

TEST_CASE("rates artifacts tabulate measured and reference exponents") {
    const auto cfg = experiment::parse_config(R"({
      "model": {"type": "brownian", "mu": 0.0, "sigma": 1.0},
      "payoff": {"type": "barrier_put", "strike": 1.2, "barrier": 0.2, "x0": 0.0},
      "plan": {"n0": 8, "pilot_samples": 1500},
      "run": {"seed": 9}
    })");
    const auto art = experiment::run_rates(cfg);
    CHECK(art.diagnostics_csv.rfind("kind,method,rho,exponent,r2,provenance\n", 0) == 0);
    CHECK(art.diagnostics_csv.find("measured,variance_decay,") != std::string::npos);
    CHECK(art.diagnostics_csv.find("theory,wh_mc,") != std::string::npos);
    CHECK(art.diagnostics_csv.find("theory,ml_wh,") != std::string::npos);
    CHECK(art.diagnostics_csv.find("theory,gaussian_correction,") != std::string::npos);
    CHECK(art.diagnostics_csv.find(",quoted") != std::string::npos);
    CHECK(art.diagnostics_csv.find(",approximate") != std::string::npos);

    const nlohmann::json rep = nlohmann::json::parse(art.report_json);
    CHECK(rep.at("subcommand") == "rates");
    CHECK(rep.at("levels_fit").get<int>() == 5);
    CHECK(std::isfinite(rep.at("beta_hat").get<double>()));
    CHECK(rep.at("beta_hat").get<double>() > 0.0);
    CHECK(rep.at("r_squared").get<double>() > 0.5);
}

TEST_CASE("cli estimate writes artifacts and honours overrides") {
    const fs::path dir = scratch_dir("estimate");
    const fs::path cfg = dir / "cfg.json";
    write_text(cfg, kSmallBmEstimate);

    REQUIRE(run_cli("estimate --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(fs::exists(dir / "a" / "report.json"));
    REQUIRE(fs::exists(dir / "a" / "levels.csv"));
    const std::string csv_a = slurp(dir / "a" / "levels.csv");
    CHECK(csv_a.rfind("level,n,M,mean,var,cost_units,wall_ms\n", 0) == 0);

    // Same config and seed: identical results up to wall-clock fields.
    REQUIRE(run_cli("estimate --config " + cfg.string() + " --out " + (dir / "b").string()) == 0);
    CHECK(drop_last_column(csv_a) == drop_last_column(slurp(dir / "b" / "levels.csv")));
    CHECK(canonical_report(slurp(dir / "a" / "report.json")) ==
          canonical_report(slurp(dir / "b" / "report.json")));

    // More threads: still identical.
    REQUIRE(run_cli("estimate --config " + cfg.string() + " --threads 3 --out " +
                    (dir / "c").string()) == 0);
    CHECK(drop_last_column(csv_a) == drop_last_column(slurp(dir / "c" / "levels.csv")));

    // Different seed: different numbers.
    REQUIRE(run_cli("estimate --config " + cfg.string() + " --seed 99 --out " +
                    (dir / "d").string()) == 0);
    CHECK(drop_last_column(csv_a) != drop_last_column(slurp(dir / "d" / "levels.csv")));
}

TEST_CASE("cli validate and rates subcommands succeed") {
    const fs::path dir = scratch_dir("validate_rates");
    const fs::path cfg = dir / "cfg.json";
    write_text(cfg, R"({
      "model": {"type": "brownian", "mu": 0.0, "sigma": 1.0},
      "horizon": "deterministic",
      "payoff": {"type": "lipschitz"},
      "plan": {"n0": 10, "pilot_samples": 1200},
      "run": {"seed": 7}
    })");
    REQUIRE(run_cli("validate --config " + cfg.string() + " --out " + (dir / "v").string()) ==
            0);
    REQUIRE(fs::exists(dir / "v" / "diagnostics.csv"));
    CHECK(slurp(dir / "v" / "diagnostics.csv")
              .rfind("check,expected,observed,metric,threshold,pass\n", 0) == 0);

    const fs::path gcfg = dir / "gamma.json";
    write_text(gcfg, R"({
      "model": {"type": "brownian", "mu": 0.0, "sigma": 1.0},
      "payoff": {"type": "barrier_put", "strike": 1.2, "barrier": 0.2, "x0": 0.0},
      "plan": {"n0": 8, "pilot_samples": 1200},
      "run": {"seed": 7}
    })");
    REQUIRE(run_cli("rates --config " + gcfg.string() + " --out " + (dir / "r").string()) == 0);
    CHECK(slurp(dir / "r" / "diagnostics.csv")
              .rfind("kind,method,rho,exponent,r2,provenance\n", 0) == 0);
}

TEST_CASE("cli exit codes distinguish failure classes") {
    const fs::path dir = scratch_dir("exit_codes");

    const fs::path bad_t = dir / "bad_t.json";
    write_text(bad_t, R"({"model": {"type": "brownian"}, "t": -1,
                          "payoff": {"type": "lipschitz"}})");
    CHECK(run_cli("estimate --config " + bad_t.string() + " --out " + dir.string()) == 2);

    const fs::path unknown = dir / "unknown.json";
    write_text(unknown, R"({"model": {"type": "brownian"}, "payoff": {"type": "lipschitz"},
                            "plam": {}})");
    CHECK(run_cli("estimate --config " + unknown.string() + " --out " + dir.string()) == 2);

    const fs::path det_beta = dir / "det_beta.json";
    write_text(det_beta, R"({"model": {"type": "beta"}, "horizon": "deterministic",
                             "payoff": {"type": "lipschitz"}})");
    CHECK(run_cli("validate --config " + det_beta.string() + " --out " + dir.string()) == 2);
    CHECK(run_cli("estimate --config " + det_beta.string() + " --out " + dir.string()) == 2);

    // The allocation explodes past the representable sample budget.
    const fs::path blowup = dir / "blowup.json";
    write_text(blowup, R"({"model": {"type": "brownian"}, "payoff": {"type": "lipschitz"},
                           "plan": {"n0": 4, "target_stat_error": 1e-9,
                                    "pilot_samples": 100}})");
    CHECK(run_cli("estimate --config " + blowup.string() + " --out " + dir.string()) == 3);

    CHECK(run_cli("estimate --config " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("estimate") == 2);
    CHECK(run_cli("frobnicate --config x.json") == 2);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("bundled example configs parse and run") {
    const fs::path bm_cfg = fs::path(WHMC_SOURCE_DIR) / "configs" / "bm_barrier.json";
    const fs::path beta_cfg = fs::path(WHMC_SOURCE_DIR) / "configs" / "beta_barrier.json";
    REQUIRE(fs::exists(bm_cfg));
    REQUIRE(fs::exists(beta_cfg));

    const auto bm = experiment::load_config_file(bm_cfg.string());
    CHECK(bm.model.is_brownian());
    CHECK(bm.payoff.is_barrier());
    CHECK(bm.run.horizon == estimators::Horizon::deterministic_t);
    CHECK(bm.plan.samples.size() == static_cast<size_t>(bm.plan.max_level + 1));

    const auto beta = experiment::load_config_file(beta_cfg.string());
    CHECK_FALSE(beta.model.is_brownian());
    CHECK(beta.model.beta_params().lambda1 == 1.5);
    CHECK(beta.run.horizon == estimators::Horizon::gamma_like);

    const fs::path dir = scratch_dir("examples");
    REQUIRE(run_cli("estimate --config " + bm_cfg.string() + " --out " + dir.string()) == 0);
    const nlohmann::json rep = nlohmann::json::parse(slurp(dir / "report.json"));
    const double est = rep.at("estimate").get<double>();
    CHECK(est > 0.0);
    CHECK(est < 1.2);
}
