#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rfs/harness.hpp"

namespace {

using rfs::harness::ExperimentConfig;
using rfs::harness::ExperimentKind;

struct CliOverrides {
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;  // section.key=value
};

void add_common(CLI::App* sub, std::string& config_path, CliOverrides& ov) {
    sub->add_option("--config", config_path, "experiment config file (key = value sections)");
    sub->add_option("--out", ov.out, "output path prefix");
    sub->add_option("--threads", ov.threads, "worker thread count");
    sub->add_option("--seed", ov.seed, "base seed");
    sub->add_option("--set", ov.sets, "override a config key, e.g. --set grids.n-list=512,1024")
        ->take_all();
}

ExperimentConfig build_config(ExperimentKind kind, const std::string& config_path,
                              const CliOverrides& ov) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = rfs::harness::parse_config_file(config_path);
    cfg.kind = kind;
    for (const auto& s : ov.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects section.key=value, got: " + s);
        std::string full = s.substr(0, eq);
        auto dot = full.find('.');
        if (dot == std::string::npos)
            throw std::invalid_argument("--set expects section.key=value, got: " + s);
        rfs::harness::apply_key(cfg, full.substr(0, dot), full.substr(dot + 1), s.substr(eq + 1));
    }
    if (ov.out) cfg.out = *ov.out;
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.seed) cfg.base_seed = *ov.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-feature spectral regularization harness"};
    app.require_subcommand(1);

    std::string sweep_cfg, rates_cfg, verify_cfg;
    CliOverrides sweep_ov, rates_ov, verify_ov;
    CLI::App* sweep = app.add_subcommand("sweep", "M x T error grid on a dataset");
    add_common(sweep, sweep_cfg, sweep_ov);
    CLI::App* rates = app.add_subcommand("rates", "learning-curve slopes under the theory schedule");
    add_common(rates, rates_cfg, rates_ov);
    CLI::App* verify = app.add_subcommand("verify", "filter-bound, equivalence and Monte-Carlo checks");
    add_common(verify, verify_cfg, verify_ov);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            auto cfg = build_config(ExperimentKind::sweep, sweep_cfg, sweep_ov);
            auto res = rfs::harness::run_sweep(cfg);
            std::cout << "sweep: " << res.detail.size() << " detail rows -> " << res.detail_path
                      << ", " << res.aggregate.size() << " aggregate rows -> "
                      << res.aggregate_path << "\n";
            return 0;
        }
        if (rates->parsed()) {
            auto cfg = build_config(ExperimentKind::rates, rates_cfg, rates_ov);
            auto res = rfs::harness::run_rates(cfg);
            std::cout << "rates: slope_hat = " << res.slope_hat << " +- " << res.slope_stderr
                      << " (theory " << res.theory_slope << ") -> " << res.summary_path << "\n";
            return 0;
        }
        auto cfg = build_config(ExperimentKind::verify, verify_cfg, verify_ov);
        auto res = rfs::harness::run_verify(cfg);
        int gated = 0, failed = 0;
        for (const auto& r : res.rows) {
            if (!r.gated) continue;
            ++gated;
            if (!r.pass) {
                ++failed;
                std::cout << "FAIL " << r.check << " " << r.detail << " value=" << r.value << "\n";
            }
        }
        std::cout << "verify: " << gated - failed << "/" << gated << " gated checks pass -> "
                  << res.checks_path << "\n";
        return res.all_gated_pass() ? 0 : 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
