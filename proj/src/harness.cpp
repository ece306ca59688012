#include "rfs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "rfs/common.hpp"
#include "rfs/estimators.hpp"
#include "rfs/features.hpp"
#include "rfs/ingest.hpp"
#include "rfs/spectrum.hpp"
#include "rfs/synth.hpp"

namespace rfs::harness {

namespace {

using estimators::EstimatorState;
using features::FeatureMap;
using filters::FilterSpec;
using filters::Method;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<long> parse_long_list(const std::string& value) {
    std::vector<long> out;
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stol(tok));
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// metric columns: empty field when not applicable
std::string fmt_metric(double v) { return std::isnan(v) ? std::string() : fmt(v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

// Runs fn(i) for i in [0, count) on `threads` workers. Work items write only
// to their own result slots, so execution order never affects output.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

ExperimentKind kind_from_name(const std::string& name) {
    if (name == "sweep") return ExperimentKind::sweep;
    if (name == "rates") return ExperimentKind::rates;
    if (name == "verify") return ExperimentKind::verify;
    throw std::invalid_argument("unknown experiment kind: " + name);
}

std::string ExperimentConfig::experiment_id() const {
    std::string k = kind == ExperimentKind::sweep ? "sweep"
                    : kind == ExperimentKind::rates ? "rates"
                                                    : "verify";
    return k + "-" + std::to_string(base_seed);
}

void ExperimentConfig::validate() const {
    if (repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    if (!(C_lambda > 0.0) || !(C_M > 0.0))
        throw std::invalid_argument("config: schedule constants must be positive");
    if (data.source != "synthetic" && data.source != "csv" && data.source != "blobs")
        throw std::invalid_argument("config: unknown data source " + data.source);
    if (kind == ExperimentKind::rates) {
        if (data.source != "synthetic")
            throw std::invalid_argument("rates: analytic error needs a synthetic dataset");
        if (features.kind != "model-fourier")
            throw std::invalid_argument("rates: analytic error needs model-fourier features");
        if (n_list.size() < 4)
            throw std::invalid_argument("rates: n-list needs at least 4 points");
        auto [lo, hi] = std::minmax_element(n_list.begin(), n_list.end());
        if (static_cast<double>(*hi) < 10.0 * static_cast<double>(*lo))
            throw std::invalid_argument("rates: n-list must span at least one decade");
    }
    if (features.kind == "model-fourier" && data.source != "synthetic")
        throw std::invalid_argument("config: model-fourier features require synthetic data");
    if (!filter.alpha.empty() && filter.alpha != "auto" && filter.alpha != "kappa") {
        try {
            if (!(std::stod(filter.alpha) > 0.0)) throw std::exception();
        } catch (...) {
            throw std::invalid_argument("config: alpha must be 'auto', 'kappa' or a positive number");
        }
    }
    filters::method_from_name(filter.method);  // throws on junk
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    ExperimentConfig cfg;
    std::string line, section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: bad section at line " + std::to_string(line_no));
            section = strip(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(line_no));
        apply_key(cfg, section, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return cfg;
}

void apply_key(ExperimentConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
    auto full = section.empty() ? key : section + "." + key;
    try {
        if (full == "experiment.kind") cfg.kind = kind_from_name(value);
        else if (full == "experiment.repetitions") cfg.repetitions = std::stoi(value);
        else if (full == "experiment.base-seed" || full == "experiment.seed")
            cfg.base_seed = std::stoull(value);
        else if (full == "experiment.threads") cfg.threads = std::stoi(value);
        else if (full == "experiment.verify-grid") cfg.verify_grid = std::stoi(value);
        else if (full == "data.source") cfg.data.source = value;
        else if (full == "data.J") cfg.data.J = std::stoi(value);
        else if (full == "data.b") cfg.data.b = std::stod(value);
        else if (full == "data.r") cfg.data.r = std::stod(value);
        else if (full == "data.R") cfg.data.R = std::stod(value);
        else if (full == "data.noise-sigma") cfg.data.noise_sigma = std::stod(value);
        else if (full == "data.csv-path") cfg.data.csv_path = value;
        else if (full == "data.label-column") cfg.data.label_column = value;
        else if (full == "data.limit") cfg.data.limit = std::stol(value);
        else if (full == "data.map-labels") cfg.data.map_labels = (value == "1" || value == "true");
        else if (full == "data.raw-negative") cfg.data.raw_negative = std::stod(value);
        else if (full == "data.raw-positive") cfg.data.raw_positive = std::stod(value);
        else if (full == "data.blob-dim") cfg.data.blob_dim = std::stoi(value);
        else if (full == "data.blob-separation") cfg.data.blob_separation = std::stod(value);
        else if (full == "data.train-fraction") cfg.data.train_fraction = std::stod(value);
        else if (full == "features.kind") cfg.features.kind = value;
        else if (full == "features.sigma-rff") cfg.features.sigma_rff = std::stod(value);
        else if (full == "features.tau") cfg.features.tau = std::stod(value);
        else if (full == "features.gamma") cfg.features.gamma = std::stod(value);
        else if (full == "features.input-radius") cfg.features.input_radius = std::stod(value);
        else if (full == "features.activation") cfg.features.activation = value;
        else if (full == "filter.method") cfg.filter.method = value;
        else if (full == "filter.alpha") cfg.filter.alpha = value;
        else if (full == "filter.alpha-fraction") cfg.filter.alpha_fraction = std::stod(value);
        else if (full == "filter.beta") cfg.filter.beta = std::stod(value);
        else if (full == "grids.M-list") cfg.M_list = (value == "auto") ? std::vector<long>{} : parse_long_list(value);
        else if (full == "grids.T-list") cfg.T_list = parse_long_list(value);
        else if (full == "grids.n-list") cfg.n_list = parse_long_list(value);
        else if (full == "schedule.C-lambda") cfg.C_lambda = std::stod(value);
        else if (full == "schedule.C-M") cfg.C_M = std::stod(value);
        else if (full == "output.out") cfg.out = value;
        else throw std::invalid_argument("config: unknown key " + full);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (...) {
        throw std::invalid_argument("config: bad value for " + full + ": " + value);
    }
}

std::pair<double, double> slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("slope_fit: need at least 3 points");
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = m * sxx - sx * sx;
    double slope = (m * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / m;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (intercept + slope * x[i]);
        rss += r * r;
    }
    double var = rss / (m - 2.0);
    double se = std::sqrt(var * m / denom);
    return {slope, se};
}

namespace {

// ---------------------------------------------------------------- data prep

struct Problem {
    Dataset train;
    Dataset test;
    bool has_test = false;
};

Problem prepare_problem(const ExperimentConfig& cfg, const synth::SyntheticModel* model,
                        const Dataset* csv_full, long n, int rep) {
    Problem p;
    const std::uint64_t base = cfg.base_seed;
    const auto un = static_cast<std::uint64_t>(n);
    const auto ur = static_cast<std::uint64_t>(rep);
    if (cfg.data.source == "synthetic") {
        p.train = synth::sample_synthetic(*model, n, seed_hash({base, ur, un, tag64("data")}));
        p.test = synth::sample_synthetic(*model, n, seed_hash({base, ur, un, tag64("test")}));
        p.has_test = true;
    } else if (cfg.data.source == "blobs") {
        Dataset all = ingest::make_blobs(2 * n, cfg.data.blob_dim, cfg.data.blob_separation,
                                         seed_hash({base, ur, un, tag64("data")}));
        auto [tr, te] = ingest::split(all, 0.5, seed_hash({base, ur, un, tag64("split")}));
        auto [tr_std, stats] = ingest::standardize(tr);
        p.train = std::move(tr_std);
        p.test = ingest::apply_transform(te, stats);
        p.has_test = true;
    } else {  // csv
        auto [tr, te] = ingest::split(*csv_full, cfg.data.train_fraction,
                                      seed_hash({base, ur, tag64("split")}));
        auto [tr_std, stats] = ingest::standardize(tr);
        p.train = std::move(tr_std);
        p.test = ingest::apply_transform(te, stats);
        p.has_test = true;
    }
    return p;
}

FeatureMap make_map(const ExperimentConfig& cfg, const synth::SyntheticModel* model, int d, long M,
                    std::uint64_t map_seed) {
    if (cfg.features.kind == "model-fourier")
        return synth::model_features(*model, static_cast<int>(M), map_seed);
    features::ScaleConstants sc;
    sc.sigma_rff = cfg.features.sigma_rff;
    sc.tau = cfg.features.tau;
    sc.gamma = cfg.features.gamma;
    sc.input_radius = cfg.features.input_radius;
    sc.activation = features::activation_from_name(cfg.features.activation);
    return features::sample_feature_map(features::map_kind_from_name(cfg.features.kind), d,
                                        static_cast<int>(M), sc, map_seed);
}

double resolve_alpha(const ExperimentConfig& cfg, const FeatureMap& map,
                     const Eigen::MatrixXd& Phi) {
    if (cfg.filter.alpha == "auto") {
        double top = estimators::covariance_spectral_norm(Phi);
        if (!(top > 0.0)) return 1.0;
        return cfg.filter.alpha_fraction / top;
    }
    if (cfg.filter.alpha == "kappa" || cfg.filter.alpha.empty())
        return estimators::default_alpha(map.kappa_sq);
    return std::stod(cfg.filter.alpha);
}

FilterSpec make_filter(Method method, const ExperimentConfig& cfg, int k, double alpha) {
    switch (method) {
        case Method::landweber:
            return FilterSpec::landweber(k, alpha);
        case Method::heavy_ball:
            return FilterSpec::heavy_ball(k, alpha, cfg.filter.beta);
        case Method::nesterov:
            return FilterSpec::nesterov(k, alpha);
        case Method::tikhonov:
            break;
    }
    throw std::logic_error("make_filter: tikhonov handled separately");
}

struct Metrics {
    double train_mse = 0.0;
    double test_mse = 0.0;
    std::optional<double> zero_one;
    std::optional<double> l2_analytic;
};

Metrics evaluate(const synth::SyntheticModel* model, const FeatureMap& map, const Problem& prob,
                 const Eigen::MatrixXd& Phi_train, const Eigen::MatrixXd& Phi_test,
                 const Eigen::VectorXd& theta) {
    Metrics m;
    Eigen::VectorXd pred_train = Phi_train * theta;
    m.train_mse = (pred_train - prob.train.y).squaredNorm() / static_cast<double>(prob.train.n());
    Eigen::VectorXd pred_test = Phi_test * theta;
    m.test_mse = (pred_test - prob.test.y).squaredNorm() / static_cast<double>(prob.test.n());
    if (prob.train.classification) {
        long wrong = 0;
        for (Eigen::Index i = 0; i < pred_test.size(); ++i) {
            double s = pred_test(i) >= 0.0 ? 1.0 : -1.0;
            if (s != prob.test.y(i)) ++wrong;
        }
        m.zero_one = static_cast<double>(wrong) / static_cast<double>(pred_test.size());
    }
    if (model && map.kind == features::MapKind::model_fourier)
        m.l2_analytic = synth::analytic_l2_error(*model, synth::estimate_coeffs(*model, map, theta));
    return m;
}

// ------------------------------------------------------------- CSV writing

const char* kDetailHeader =
    "experiment_id,n,d,M,T,rep,lambda,alpha,beta,train_mse,test_mse,zero_one,l2_analytic,wall_ms,error";

void write_detail_csv(const std::string& path, const std::string& experiment_id,
                      const std::vector<DetailRow>& rows, bool timestamp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    if (timestamp) {
        auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        out << "# generated " << now << "\n";
    }
    out << kDetailHeader << "\n";
    for (const auto& r : rows) {
        out << experiment_id << ',' << r.n << ',' << r.d << ',' << r.M << ',' << r.T << ','
            << r.rep << ',' << fmt(r.lambda) << ',' << fmt(r.alpha) << ',' << fmt(r.beta) << ',';
        if (r.error.empty())
            out << fmt_metric(r.train_mse) << ',' << fmt_metric(r.test_mse) << ','
                << fmt_opt(r.zero_one) << ',' << fmt_opt(r.l2_analytic) << ',';
        else
            out << ",,,,";
        out << fmt(r.wall_ms) << ',' << sanitize(r.error) << "\n";
    }
}

std::vector<AggregateRow> aggregate_rows(const std::vector<DetailRow>& detail) {
    std::map<std::tuple<long, long, long>, std::vector<const DetailRow*>> groups;
    for (const auto& r : detail)
        if (r.error.empty()) groups[{r.n, r.M, r.T}].push_back(&r);

    std::vector<AggregateRow> out;
    for (const auto& [key, rows] : groups) {
        AggregateRow a;
        std::tie(a.n, a.M, a.T) = key;
        a.count = rows.size();
        std::vector<double> tr, te, zo, l2;
        for (const auto* r : rows) {
            if (std::isfinite(r->train_mse)) tr.push_back(r->train_mse);
            if (std::isfinite(r->test_mse)) te.push_back(r->test_mse);
            if (r->zero_one) zo.push_back(*r->zero_one);
            if (r->l2_analytic) l2.push_back(*r->l2_analytic);
        }
        auto mtr = mean_stderr(tr);
        a.mean_train_mse = tr.empty() ? kNaN : mtr.mean;
        a.stderr_train_mse = tr.empty() ? kNaN : mtr.stderr_;
        auto mte = mean_stderr(te);
        a.mean_test_mse = te.empty() ? kNaN : mte.mean;
        a.stderr_test_mse = te.empty() ? kNaN : mte.stderr_;
        if (!zo.empty()) {
            auto mzo = mean_stderr(zo);
            a.mean_zero_one = mzo.mean;
            a.stderr_zero_one = mzo.stderr_;
        }
        if (!l2.empty()) {
            auto ml2 = mean_stderr(l2);
            a.mean_l2 = ml2.mean;
            a.stderr_l2 = ml2.stderr_;
        }
        out.push_back(a);
    }
    return out;
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    out << "n,M,T,count,mean_train_mse,stderr_train_mse,mean_test_mse,stderr_test_mse,"
           "mean_zero_one,stderr_zero_one,mean_l2_analytic,stderr_l2_analytic\n";
    for (const auto& a : rows) {
        out << a.n << ',' << a.M << ',' << a.T << ',' << a.count << ','
            << fmt_metric(a.mean_train_mse) << ',' << fmt_metric(a.stderr_train_mse) << ','
            << fmt_metric(a.mean_test_mse) << ',' << fmt_metric(a.stderr_test_mse) << ','
            << fmt_opt(a.mean_zero_one) << ',' << fmt_opt(a.stderr_zero_one) << ','
            << fmt_opt(a.mean_l2) << ',' << fmt_opt(a.stderr_l2) << "\n";
    }
}

std::vector<long> default_T_list() {
    std::vector<long> t;
    for (int i = 0; i <= 10; ++i) t.push_back(1L << i);
    return t;
}

std::vector<long> auto_M_list(long n, long d) {
    std::vector<long> out;
    for (double c : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        long m = static_cast<long>(
            std::ceil(c * std::sqrt(static_cast<double>(n)) * static_cast<double>(d)));
        m = std::max(1L, m);
        if (out.empty() || out.back() != m) out.push_back(m);
    }
    return out;
}

}  // namespace

// ------------------------------------------------------------------- sweep

SweepResult run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const Method method = filters::method_from_name(cfg.filter.method);

    std::optional<synth::SyntheticModel> model;
    if (cfg.data.source == "synthetic")
        model = synth::build_model(cfg.data.J, cfg.data.b, cfg.data.r, cfg.data.R,
                                   cfg.data.noise_sigma, seed_hash({cfg.base_seed, tag64("model")}));
    std::optional<Dataset> csv_full;
    if (cfg.data.source == "csv")
        csv_full = ingest::load_csv(cfg.data.csv_path, cfg.data.label_column, cfg.data.limit,
                                    cfg.data.map_labels
                                        ? std::optional<ingest::ClassMapping>(
                                              {cfg.data.raw_negative, cfg.data.raw_positive})
                                        : std::nullopt);

    std::vector<long> n_list = cfg.n_list.empty() ? std::vector<long>{2000} : cfg.n_list;
    if (cfg.data.source == "csv") {
        long n_train = static_cast<long>(
            std::floor(cfg.data.train_fraction * static_cast<double>(csv_full->n()) + 1e-9));
        n_list = {n_train};
    }
    std::vector<long> T_list = cfg.T_list.empty() ? default_T_list() : cfg.T_list;
    std::sort(T_list.begin(), T_list.end());

    struct Item {
        long n, M;
        int rep;
    };
    std::vector<Item> items;
    for (long n : n_list) {
        long d = cfg.data.source == "synthetic" ? 1
                 : cfg.data.source == "blobs"   ? cfg.data.blob_dim
                                                : csv_full->dim();
        std::vector<long> M_list = cfg.M_list.empty() ? auto_M_list(n, d) : cfg.M_list;
        for (long M : M_list)
            for (int rep = 0; rep < cfg.repetitions; ++rep) items.push_back({n, M, rep});
    }

    std::vector<std::vector<DetailRow>> slots(items.size());
    parallel_for(items.size(), cfg.threads, [&](std::size_t idx) {
        const Item& item = items[idx];
        std::vector<DetailRow>& rows = slots[idx];
        Timer timer;
        DetailRow proto;
        proto.n = item.n;
        proto.M = item.M;
        proto.rep = item.rep;
        proto.beta = method == Method::heavy_ball ? cfg.filter.beta : 0.0;
        try {
            Problem prob = prepare_problem(cfg, model ? &*model : nullptr,
                                           csv_full ? &*csv_full : nullptr, item.n, item.rep);
            proto.d = prob.train.dim();
            FeatureMap map =
                make_map(cfg, model ? &*model : nullptr, static_cast<int>(prob.train.dim()), item.M,
                         seed_hash({cfg.base_seed, static_cast<std::uint64_t>(item.rep),
                                    static_cast<std::uint64_t>(item.n),
                                    static_cast<std::uint64_t>(item.M), tag64("map")}));
            Eigen::MatrixXd Phi_train = features::apply_features(map, prob.train.X);
            Eigen::MatrixXd Phi_test = features::apply_features(map, prob.test.X);
            double alpha = method == Method::tikhonov ? 0.0 : resolve_alpha(cfg, map, Phi_train);
            proto.alpha = alpha;

            if (method == Method::tikhonov) {
                for (long T : T_list) {
                    DetailRow row = proto;
                    row.T = T;
                    row.lambda = 1.0 / static_cast<double>(T);
                    try {
                        EstimatorState st =
                            estimators::fit_rf_krr(Phi_train, prob.train.y, row.lambda, map.id());
                        Metrics m = evaluate(model ? &*model : nullptr, map, prob, Phi_train,
                                             Phi_test, st.theta);
                        row.train_mse = m.train_mse;
                        row.test_mse = m.test_mse;
                        row.zero_one = m.zero_one;
                        row.l2_analytic = m.l2_analytic;
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                    row.wall_ms = timer.ms();
                    rows.push_back(row);
                }
            } else {
                FilterSpec spec = make_filter(method, cfg, static_cast<int>(T_list.back()), alpha);
                estimators::IterativeTrajectory traj(Phi_train, prob.train.y, spec, map.id());
                for (long T : T_list) {
                    DetailRow row = proto;
                    row.T = T;
                    double kk = static_cast<double>(T);
                    row.lambda = method == Method::landweber ? 1.0 / kk : 1.0 / (kk * kk);
                    try {
                        traj.advance_to(static_cast<int>(T));
                        Metrics m = evaluate(model ? &*model : nullptr, map, prob, Phi_train,
                                             Phi_test, traj.theta());
                        row.train_mse = m.train_mse;
                        row.test_mse = m.test_mse;
                        row.zero_one = m.zero_one;
                        row.l2_analytic = m.l2_analytic;
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                    row.wall_ms = timer.ms();
                    rows.push_back(row);
                }
            }
        } catch (const std::exception& e) {
            rows.clear();
            for (long T : T_list) {
                DetailRow row = proto;
                row.T = T;
                row.error = e.what();
                row.wall_ms = timer.ms();
                rows.push_back(row);
            }
        }
    });

    SweepResult res;
    for (auto& s : slots)
        for (auto& r : s) res.detail.push_back(std::move(r));
    std::sort(res.detail.begin(), res.detail.end(), [](const DetailRow& a, const DetailRow& b) {
        return std::tie(a.n, a.M, a.T, a.rep) < std::tie(b.n, b.M, b.T, b.rep);
    });
    res.aggregate = aggregate_rows(res.detail);
    res.detail_path = cfg.out + "_detail.csv";
    res.aggregate_path = cfg.out + "_aggregate.csv";
    write_detail_csv(res.detail_path, cfg.experiment_id(), res.detail, /*timestamp=*/true);
    write_aggregate_csv(res.aggregate_path, res.aggregate);
    return res;
}

// ------------------------------------------------------------------- rates

RatesResult run_rates(const ExperimentConfig& cfg) {
    cfg.validate();
    const Method method = filters::method_from_name(cfg.filter.method);

    synth::SyntheticModel model =
        synth::build_model(cfg.data.J, cfg.data.b, cfg.data.r, cfg.data.R, cfg.data.noise_sigma,
                           seed_hash({cfg.base_seed, tag64("model")}));
    spectrum::TheoryParams params;
    params.r = cfg.data.r;
    params.b = cfg.data.b;
    params.R = cfg.data.R;
    params.C_lambda = cfg.C_lambda;
    params.C_M = cfg.C_M;

    struct Item {
        long n;
        int rep;
        spectrum::Schedule sched;
    };
    std::vector<Item> items;
    for (long n : cfg.n_list) {
        spectrum::Schedule sched = spectrum::theory_schedule(n, params, method);
        for (int rep = 0; rep < cfg.repetitions; ++rep) items.push_back({n, rep, sched});
    }

    std::vector<DetailRow> slots(items.size());
    parallel_for(items.size(), cfg.threads, [&](std::size_t idx) {
        const Item& item = items[idx];
        Timer timer;
        DetailRow row;
        row.n = item.n;
        row.d = 1;
        row.M = item.sched.M;
        row.T = item.sched.k;
        row.rep = item.rep;
        row.lambda = item.sched.lambda;
        row.beta = method == Method::heavy_ball ? cfg.filter.beta : 0.0;
        try {
            const auto un = static_cast<std::uint64_t>(item.n);
            const auto ur = static_cast<std::uint64_t>(item.rep);
            Dataset train =
                synth::sample_synthetic(model, item.n, seed_hash({cfg.base_seed, ur, un, tag64("data")}));
            FeatureMap map = synth::model_features(
                model, static_cast<int>(item.sched.M),
                seed_hash({cfg.base_seed, ur, un, static_cast<std::uint64_t>(item.sched.M),
                           tag64("map")}));
            Eigen::MatrixXd Phi = features::apply_features(map, train.X);
            EstimatorState st;
            if (method == Method::tikhonov) {
                st = estimators::fit_rf_krr(Phi, train.y, item.sched.lambda, map.id());
            } else {
                double alpha = resolve_alpha(cfg, map, Phi);
                row.alpha = alpha;
                FilterSpec spec = make_filter(method, cfg, static_cast<int>(item.sched.k), alpha);
                st = estimators::fit_rf_iterative(Phi, train.y, spec, map.id());
            }
            row.train_mse =
                (Phi * st.theta - train.y).squaredNorm() / static_cast<double>(train.n());
            row.test_mse = kNaN;
            row.l2_analytic =
                synth::analytic_l2_error(model, synth::estimate_coeffs(model, map, st.theta));
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.wall_ms = timer.ms();
        slots[idx] = row;
    });

    RatesResult res;
    res.detail = std::move(slots);
    std::sort(res.detail.begin(), res.detail.end(), [](const DetailRow& a, const DetailRow& b) {
        return std::tie(a.n, a.rep) < std::tie(b.n, b.rep);
    });
    res.aggregate = aggregate_rows(res.detail);

    std::vector<double> log_n, log_err;
    for (const auto& a : res.aggregate) {
        if (!a.mean_l2 || !(*a.mean_l2 > 0.0)) continue;
        log_n.push_back(std::log(static_cast<double>(a.n)));
        log_err.push_back(std::log(*a.mean_l2));
    }
    if (log_n.size() >= 3) {
        auto [slope, se] = slope_fit(log_n, log_err);
        res.slope_hat = slope;
        res.slope_stderr = se;
    } else {
        res.slope_hat = kNaN;
        res.slope_stderr = kNaN;
    }
    res.theory_slope = -params.r / (2.0 * params.r + params.b);

    res.detail_path = cfg.out + "_detail.csv";
    res.aggregate_path = cfg.out + "_aggregate.csv";
    res.summary_path = cfg.out + "_slope.csv";
    write_detail_csv(res.detail_path, cfg.experiment_id(), res.detail, /*timestamp=*/true);
    write_aggregate_csv(res.aggregate_path, res.aggregate);
    std::ofstream slope_out(res.summary_path);
    slope_out << "slope_hat,slope_stderr,theory_slope,abs_deviation\n";
    slope_out << fmt(res.slope_hat) << ',' << fmt(res.slope_stderr) << ',' << fmt(res.theory_slope)
              << ',' << fmt(std::abs(res.slope_hat - res.theory_slope)) << "\n";
    return res;
}

// ------------------------------------------------------------------ verify

bool VerifyResult::all_gated_pass() const {
    for (const auto& r : rows)
        if (r.gated && !r.pass) return false;
    return true;
}

namespace {

void append_family_rows(VerifyResult& res, const filters::FilterReport& rep,
                        const std::string& family, const std::vector<double>& qs) {
    bool family_pass = rep.all_gated_pass();
    bool any_gated = false;
    for (const auto& r : rep.rows) any_gated |= r.gated;
    VerifyRow base;
    base.check = "filter-bounds";
    base.detail = family;
    base.value = rep.family_sup_tphi();
    base.threshold = kNaN;
    base.gated = any_gated;
    base.pass = family_pass;
    res.rows.push_back(base);
    for (double q : qs) {
        VerifyRow row;
        row.check = "qualification";
        row.detail = family + " q=" + fmt(q);
        row.value = rep.family_cq(q);
        row.threshold = kNaN;
        row.gated = false;
        row.pass = true;
        res.rows.push_back(row);
    }
    for (const auto& r : rep.rows) res.filter_report.rows.push_back(r);
}

}  // namespace

VerifyResult run_verify(const ExperimentConfig& cfg) {
    cfg.validate();
    VerifyResult res;
    const int G = std::max(16, cfg.verify_grid);
    std::vector<double> t_grid = filters::log_grid(1e-3, 1.0, G);
    std::vector<double> lam_grid = filters::log_grid(1e-3, 1.0, G);

    // filter bound checks per family
    append_family_rows(res, filters::verify_filter(Method::tikhonov, 1.0, 0.0, t_grid, lam_grid,
                                                   {0.0, 0.5, 1.0, 2.0}),
                       "tikhonov", {0.5, 1.0, 2.0});
    append_family_rows(
        res, filters::verify_filter(Method::landweber, 1.0, 0.0, t_grid, lam_grid,
                                    {0.0, 0.5, 1.0, 2.0, 4.0}),
        "landweber a=1", {0.5, 1.0, 2.0, 4.0});
    append_family_rows(
        res, filters::verify_filter(Method::landweber, 0.5, 0.0, t_grid, lam_grid,
                                    {0.0, 0.5, 1.0, 2.0, 4.0}),
        "landweber a=0.5", {0.5, 1.0, 2.0, 4.0});
    {
        std::vector<int> ks;
        for (int k = 1; k <= 64; ++k) ks.push_back(k);
        double beta = (cfg.filter.beta > 0.0 && cfg.filter.beta < 1.0) ? cfg.filter.beta : 0.25;
        append_family_rows(res,
                           filters::verify_filter(Method::heavy_ball, 1.0, beta, t_grid,
                                                  filters::lambda_grid_from_iterations(
                                                      Method::heavy_ball, ks),
                                                  {0.0, 1.0, 2.0}),
                           "heavy-ball", {1.0, 2.0});
        append_family_rows(res,
                           filters::verify_filter(Method::nesterov, 1.0, 0.0, t_grid,
                                                  filters::lambda_grid_from_iterations(
                                                      Method::nesterov, ks),
                                                  {0.0, 1.0, 2.0}),
                           "nesterov", {1.0, 2.0});
    }

    // saturation contrast: tikhonov must blow past 10 at q=2 while landweber
    // stays under its declared constant
    {
        auto tik = filters::verify_filter(Method::tikhonov, 1.0, 0.0, t_grid, lam_grid, {2.0});
        VerifyRow row;
        row.check = "saturation";
        row.detail = "tikhonov q=2 empirical c_q";
        row.value = tik.family_cq(2.0);
        row.threshold = 10.0;
        row.gated = true;
        row.pass = row.value > 10.0;
        res.rows.push_back(row);
        auto land = filters::verify_filter(Method::landweber, 1.0, 0.0, t_grid, lam_grid, {2.0});
        VerifyRow row2;
        row2.check = "saturation";
        row2.detail = "landweber q=2 empirical c_q";
        row2.value = land.family_cq(2.0);
        row2.threshold = std::pow(2.0 / 1.0, 2.0) * filters::kVerifySlack;
        row2.gated = true;
        row2.pass = row2.value <= row2.threshold;
        res.rows.push_back(row2);
    }

    // primal-dual equivalence on small random instances
    {
        const int n = 40, d = 3, M = 20, n_test = 15;
        for (int inst = 0; inst < 5; ++inst) {
            auto rng = make_rng(seed_hash({cfg.base_seed, static_cast<std::uint64_t>(inst),
                                           tag64("equiv")}));
            std::normal_distribution<double> gauss(0.0, 1.0);
            Eigen::MatrixXd X(n, d), Xt(n_test, d);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) X(i, j) = gauss(rng);
            for (int i = 0; i < n_test; ++i)
                for (int j = 0; j < d; ++j) Xt(i, j) = gauss(rng);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) y(i) = std::sin(X(i, 0)) + 0.3 * gauss(rng);

            features::ScaleConstants sc;
            FeatureMap map = features::sample_feature_map(
                features::MapKind::gaussian_rff, d, M, sc,
                seed_hash({cfg.base_seed, static_cast<std::uint64_t>(inst), tag64("equivmap")}));
            Eigen::MatrixXd Phi = features::apply_features(map, X);
            Eigen::MatrixXd Phi_t = features::apply_features(map, Xt);
            Eigen::MatrixXd K = Phi * Phi.transpose();
            Eigen::MatrixXd K_cross = Phi_t * Phi.transpose();  // K_M(x_test, x_i)
            double top = estimators::covariance_spectral_norm(Phi);
            double alpha = 0.9 / top;

            auto check_one = [&](const FilterSpec& spec, const char* name, double tol) {
                EstimatorState st;
                if (spec.method == Method::tikhonov)
                    st = estimators::fit_rf_krr(Phi, y, spec.lambda, map.id());
                else
                    st = estimators::fit_rf_iterative(Phi, y, spec, map.id());
                Eigen::VectorXd dual = estimators::fit_kernel_oracle(K, y, spec);
                double diff =
                    ((Phi_t * st.theta) - (K_cross * dual)).cwiseAbs().maxCoeff();
                VerifyRow row;
                row.check = "equivalence";
                row.detail = std::string(name) + " instance " + std::to_string(inst);
                row.value = diff;
                row.threshold = tol;
                row.gated = true;
                row.pass = diff <= tol;
                res.rows.push_back(row);
            };
            check_one(FilterSpec::tikhonov(0.1), "tikhonov", 1e-8);
            check_one(FilterSpec::landweber(200, std::min(alpha, 1.0 / top)), "landweber", 1e-6);
            check_one(FilterSpec::heavy_ball(120, std::min(alpha, 1.0 / top), 0.25), "heavy-ball",
                      1e-6);
            check_one(FilterSpec::nesterov(60, std::min(alpha, 1.0 / top)), "nesterov", 1e-6);
        }
    }

    // Monte-Carlo kernel convergence
    {
        const int d = 2, pairs = 200;
        auto rng = make_rng(seed_hash({cfg.base_seed, tag64("rffmc")}));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd A(pairs, d), B(pairs, d);
        for (int i = 0; i < pairs; ++i)
            for (int j = 0; j < d; ++j) {
                A(i, j) = gauss(rng);
                B(i, j) = gauss(rng);
            }
        features::ScaleConstants sc;
        auto median_err = [&](int M, int map_rep) {
            FeatureMap map = features::sample_feature_map(
                features::MapKind::gaussian_rff, d, M, sc,
                seed_hash({cfg.base_seed, tag64("rffmap"), static_cast<std::uint64_t>(M),
                           static_cast<std::uint64_t>(map_rep)}));
            features::KernelOracle oracle = features::KernelOracle::for_map(map);
            std::vector<double> errs(pairs);
            Eigen::MatrixXd Za = features::apply_features(map, A);
            Eigen::MatrixXd Zb = features::apply_features(map, B);
            for (int i = 0; i < pairs; ++i) {
                double km = Za.row(i).dot(Zb.row(i));
                double ki = features::limit_kernel(oracle, A.row(i).transpose(), B.row(i).transpose());
                errs[static_cast<std::size_t>(i)] = std::abs(km - ki);
            }
            std::nth_element(errs.begin(), errs.begin() + pairs / 2, errs.end());
            return errs[pairs / 2];
        };
        // a single map's median fluctuates by +-50%; average over resampled maps
        const int map_reps = 16;
        double e256 = 0.0, e4096 = 0.0;
        for (int r = 0; r < map_reps; ++r) {
            e256 += median_err(256, r);
            e4096 += median_err(4096, r);
        }
        VerifyRow row;
        row.check = "rff-mc";
        row.detail = "median error ratio M=256 vs M=4096";
        row.value = e256 / e4096;
        row.threshold = kNaN;
        row.gated = true;
        row.pass = row.value >= 2.5 && row.value <= 6.0;
        res.rows.push_back(row);
    }
    {
        const int d = 3, M = 10000, pairs = 20;
        auto rng = make_rng(seed_hash({cfg.base_seed, tag64("ntkmc")}));
        std::normal_distribution<double> gauss(0.0, 1.0);
        features::ScaleConstants sc;
        sc.activation = features::Activation::relu;
        FeatureMap map = features::sample_feature_map(features::MapKind::ntk, d, M, sc,
                                                      seed_hash({cfg.base_seed, tag64("ntkmap")}));
        features::KernelOracle oracle = features::KernelOracle::for_map(map);
        double max_z = 0.0;
        for (int i = 0; i < pairs; ++i) {
            Eigen::VectorXd x(d), xp(d);
            for (int j = 0; j < d; ++j) {
                x(j) = gauss(rng);
                xp(j) = gauss(rng);
            }
            x /= x.norm();
            xp /= xp.norm();  // stay in the declared unit-ball domain
            Eigen::MatrixXd P(2, d);
            P.row(0) = x.transpose();
            P.row(1) = xp.transpose();
            Eigen::MatrixXd Z = features::apply_features(map, P);
            // per-feature kernel contributions for the Monte-Carlo stderr
            Eigen::VectorXd contrib(M);
            for (int m = 0; m < M; ++m) {
                double c = 0.0;
                for (int fam = 0; fam < map.p; ++fam)
                    c += Z(0, fam * M + m) * Z(1, fam * M + m);
                contrib(m) = c * M;  // undo the 1/M in the product of two 1/sqrt(M)
            }
            double km = Z.row(0).dot(Z.row(1));
            double ki = features::limit_kernel(oracle, x, xp);
            double sd = std::sqrt((contrib.array() - contrib.mean()).square().sum() /
                                  static_cast<double>(M - 1));
            double se = sd / std::sqrt(static_cast<double>(M));
            if (se > 0.0) max_z = std::max(max_z, std::abs(km - ki) / se);
        }
        VerifyRow row;
        row.check = "ntk-mc";
        row.detail = "max |K_M - K_inf| / stderr over 20 pairs, M=10000";
        row.value = max_z;
        row.threshold = 5.0;
        row.gated = true;
        row.pass = max_z <= 5.0;
        res.rows.push_back(row);
    }

    res.checks_path = cfg.out + "_checks.csv";
    res.filters_path = cfg.out + "_filters.csv";
    std::ofstream out(res.checks_path);
    if (!out) throw std::runtime_error("cannot open output file " + res.checks_path);
    out << "check,detail,value,threshold,gated,pass\n";
    for (const auto& r : res.rows) {
        out << r.check << ',' << r.detail << ',' << fmt(r.value) << ','
            << (std::isnan(r.threshold) ? std::string() : fmt(r.threshold)) << ','
            << (r.gated ? 1 : 0) << ',' << (r.gated ? (r.pass ? "1" : "0") : "") << "\n";
    }
    std::ofstream fout(res.filters_path);
    fout << res.filter_report.to_csv();
    return res;
}

}  // namespace rfs::harness
