#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"

#include "whmc/errors.hpp"
#include "whmc/experiment.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw whmc::config_error("cannot write " + p.string());
    out << content;
    if (!out) throw whmc::config_error("write failed for " + p.string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wiener-Hopf walk simulation engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed_override = 0;
    int threads_override = 0;
    bool have_seed = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: current)");
        sub->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--threads", threads_override, "override the config thread count");
    };

    CLI::App* cmd_estimate =
        app.add_subcommand("estimate", "run the multilevel estimator and write artifacts");
    CLI::App* cmd_validate =
        app.add_subcommand("validate", "run exact-identity checks for the configured model");
    CLI::App* cmd_rates =
        app.add_subcommand("rates", "fit the variance decay and tabulate reference exponents");
    add_common(cmd_estimate);
    add_common(cmd_validate);
    add_common(cmd_rates);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        whmc::experiment::Config cfg = whmc::experiment::load_config_file(config_path);
        if (have_seed) cfg.run.seed = seed_override;
        if (threads_override > 0) cfg.run.threads = threads_override;

        const fs::path dir(out_dir);
        if (cmd_estimate->parsed()) {
            const auto art = whmc::experiment::run_estimate(cfg);
            write_file(dir, "report.json", art.report_json);
            write_file(dir, "levels.csv", art.levels_csv);
            std::printf("estimate written to %s\n", (dir / "report.json").c_str());
            return 0;
        }
        if (cmd_validate->parsed()) {
            const auto art = whmc::experiment::run_validate(cfg);
            write_file(dir, "report.json", art.report_json);
            write_file(dir, "diagnostics.csv", art.diagnostics_csv);
            std::printf("validation %s; details in %s\n",
                        art.all_passed ? "passed" : "FAILED",
                        (dir / "diagnostics.csv").c_str());
            return art.all_passed ? 0 : 1;
        }
        const auto art = whmc::experiment::run_rates(cfg);
        write_file(dir, "report.json", art.report_json);
        write_file(dir, "diagnostics.csv", art.diagnostics_csv);
        std::printf("rates written to %s\n", (dir / "diagnostics.csv").c_str());
        return 0;
    } catch (const whmc::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const whmc::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
