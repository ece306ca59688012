#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfs/dataset.hpp"
#include "rfs/filters.hpp"

namespace rfs::harness {

enum class ExperimentKind { sweep, rates, verify };

ExperimentKind kind_from_name(const std::string& name);

struct DataConfig {
    std::string source = "synthetic";  // synthetic | csv | blobs
    // synthetic model
    int J = 200;
    double b = 1.0;
    double r = 0.5;
    double R = 1.0;
    double noise_sigma = 0.3;
    // csv
    std::string csv_path;
    std::string label_column = "0";
    long limit = 5000;
    bool map_labels = false;
    double raw_negative = 0.0;
    double raw_positive = 1.0;
    // blobs
    int blob_dim = 14;
    double blob_separation = 3.0;
    double train_fraction = 0.5;
};

struct FeatureConfig {
    std::string kind = "model-fourier";  // model-fourier | gaussian-rff | ntk
    double sigma_rff = 1.0;
    double tau = 1.0;
    double gamma = 1.0;
    double input_radius = 1.0;
    std::string activation = "tanh";
};

struct FilterConfig {
    std::string method = "landweber";
    std::string alpha = "auto";   // "auto" | "kappa" | numeric literal
    double alpha_fraction = 0.95; // fraction of 1/lambda_max for alpha = auto
    double beta = 0.0;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::verify;
    DataConfig data;
    FeatureConfig features;
    FilterConfig filter;
    std::vector<long> M_list;  // empty => auto grid ceil(c sqrt(n) d), c in {0.25..16}
    std::vector<long> T_list;  // empty => {2^i : i <= 10}
    std::vector<long> n_list;  // empty => {2000}
    int repetitions = 20;
    std::uint64_t base_seed = 1;
    int threads = 1;
    double C_lambda = 1.0;
    double C_M = 1.0;
    int verify_grid = 1000;    // t and lambda grid resolution for run_verify
    std::string out = "rfs_out";

    std::string experiment_id() const;
    void validate() const;
};

// `key = value` lines under [section] headers; keys mirror the CLI flags.
ExperimentConfig parse_config_file(const std::string& path);
void apply_key(ExperimentConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value);

struct DetailRow {
    long n = 0;
    long d = 0;
    long M = 0;
    long T = 0;
    int rep = 0;
    double lambda = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    std::optional<double> zero_one;
    std::optional<double> l2_analytic;
    double wall_ms = 0.0;
    std::string error;  // per-cell failure, run continues
};

struct AggregateRow {
    long n = 0, M = 0, T = 0;
    double mean_train_mse = 0, stderr_train_mse = 0;
    double mean_test_mse = 0, stderr_test_mse = 0;
    std::optional<double> mean_zero_one, stderr_zero_one;
    std::optional<double> mean_l2, stderr_l2;
    std::size_t count = 0;
};

struct SweepResult {
    std::vector<DetailRow> detail;
    std::vector<AggregateRow> aggregate;
    std::string detail_path, aggregate_path;
};

struct RatesResult {
    std::vector<DetailRow> detail;
    std::vector<AggregateRow> aggregate;
    double slope_hat = 0.0;       // slope of log mean L2 error vs log n
    double slope_stderr = 0.0;
    double theory_slope = 0.0;    // -r/(2r+b)
    std::string detail_path, aggregate_path, summary_path;
};

struct VerifyRow {
    std::string check;
    std::string detail;
    double value = 0.0;
    double threshold = 0.0;  // NaN when the row is informational
    bool gated = false;
    bool pass = true;
};

struct VerifyResult {
    std::vector<VerifyRow> rows;
    filters::FilterReport filter_report;
    bool all_gated_pass() const;
    std::string checks_path, filters_path;
};

SweepResult run_sweep(const ExperimentConfig& cfg);
RatesResult run_rates(const ExperimentConfig& cfg);
VerifyResult run_verify(const ExperimentConfig& cfg);

// Least-squares line fit of y against x; returns {slope, stderr_of_slope}.
std::pair<double, double> slope_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rfs::harness
