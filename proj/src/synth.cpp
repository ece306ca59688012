#include "rfs/synth.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rfs/common.hpp"

namespace rfs::synth {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Eigen::VectorXd SyntheticModel::target_coeffs() const {
    Eigen::VectorXd out(2 * J);
    for (int j = 0; j < J; ++j) {
        double w = std::pow(eig(j), r);
        out(j) = w * c(j);
        out(J + j) = w * s(j);
    }
    return out;
}

double SyntheticModel::target_l2_norm() const { return target_coeffs().norm(); }

std::string SyntheticModel::to_csv() const {
    std::ostringstream os;
    os << "j,eig_j,c_j,s_j\n";
    os.precision(17);
    for (int j = 0; j < J; ++j)
        os << (j + 1) << ',' << eig(j) << ',' << c(j) << ',' << s(j) << '\n';
    return os.str();
}

SyntheticModel build_model(int J, double b, double r, double R, double noise_sigma,
                           std::uint64_t seed) {
    if (J < 1) throw std::invalid_argument("build_model: J must be >= 1");
    if (!(b > 0.0) || b > 1.0) throw std::invalid_argument("build_model: b must lie in (0,1]");
    if (!(r > 0.0)) throw std::invalid_argument("build_model: r must be positive");
    if (!(R > 0.0)) throw std::invalid_argument("build_model: R must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("build_model: noise_sigma must be >= 0");
    if (!(2.0 * r + b > 1.0))
        throw std::invalid_argument("build_model: need 2r + b > 1 (hard regime is out of scope)");

    SyntheticModel m;
    m.J = J;
    m.b = b;
    m.r = r;
    m.R = R;
    m.noise_sigma = noise_sigma;
    m.seed = seed;
    m.eig.resize(J);
    for (int j = 1; j <= J; ++j)
        m.eig(j - 1) = std::pow(static_cast<double>(j), -1.0 / b);  // lambda_1 = 1

    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    m.c.resize(J);
    m.s.resize(J);
    for (int j = 0; j < J; ++j) m.c(j) = gauss(rng);
    for (int j = 0; j < J; ++j) m.s(j) = gauss(rng);
    double norm = std::sqrt(m.c.squaredNorm() + m.s.squaredNorm());
    if (norm == 0.0) {  // cannot happen in practice; keep the contract total
        m.c(0) = R;
    } else {
        m.c *= R / norm;
        m.s *= R / norm;
    }
    return m;
}

double true_target(const SyntheticModel& model, double x) {
    double g = 0.0;
    const double sqrt2 = std::numbers::sqrt2;
    for (int j = 1; j <= model.J; ++j) {
        double w = std::pow(model.eig(j - 1), model.r);
        g += w * (model.c(j - 1) * sqrt2 * std::cos(j * x) + model.s(j - 1) * sqrt2 * std::sin(j * x));
    }
    return g;
}

Dataset sample_synthetic(const SyntheticModel& model, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_synthetic: n must be >= 1");
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unif(0.0, kTwoPi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Dataset ds;
    ds.X.resize(n, 1);
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) ds.X(i, 0) = unif(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
        double eps = model.noise_sigma > 0.0 ? model.noise_sigma * gauss(rng) : 0.0;
        ds.y(i) = true_target(model, ds.X(i, 0)) + eps;
    }
    ds.source = "synthetic(J=" + std::to_string(model.J) + ",b=" + std::to_string(model.b) +
                ",r=" + std::to_string(model.r) + ")";
    return ds;
}

double analytic_l2_error(const SyntheticModel& model, const Eigen::VectorXd& est_coeffs) {
    if (est_coeffs.size() != 2 * model.J)
        throw std::invalid_argument("analytic_l2_error: coefficient vector must have length 2J");
    return (model.target_coeffs() - est_coeffs).norm();
}

double analytic_effective_dimension(const SyntheticModel& model, double lambda) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("analytic_effective_dimension: lambda must be positive");
    double acc = 0.0;
    for (int j = 0; j < model.J; ++j) acc += 2.0 * model.eig(j) / (model.eig(j) + lambda);
    return acc;
}

double fit_capacity_constant(const SyntheticModel& model, const std::vector<double>& lambda_grid) {
    if (lambda_grid.empty()) throw std::invalid_argument("fit_capacity_constant: empty grid");
    double c = 0.0;
    for (double l : lambda_grid)
        c = std::max(c, analytic_effective_dimension(model, l) * std::pow(l, model.b));
    return c;
}

features::FeatureMap model_features(const SyntheticModel& model, int M, std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("model_features: M must be >= 1");
    features::FeatureMap map;
    map.kind = features::MapKind::model_fourier;
    map.p = 2;
    map.M = M;
    map.d = 1;
    map.seed = seed;
    map.model_eigs = model.eig;
    map.freq_index.resize(M);
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> pick(1, model.J);
    for (int m = 0; m < M; ++m) map.freq_index(m) = pick(rng);
    map.kappa_sq = 2.0 * static_cast<double>(model.J) * model.eig.maxCoeff();
    return map;
}

Eigen::VectorXd estimate_coeffs(const SyntheticModel& model, const features::FeatureMap& map,
                                const Eigen::VectorXd& theta) {
    if (map.kind != features::MapKind::model_fourier)
        throw std::invalid_argument("estimate_coeffs: map must be model-fourier");
    if (theta.size() != map.output_dim())
        throw std::invalid_argument("estimate_coeffs: theta length mismatch");
    // feature m contributes sqrt(J lambda_j / M) theta_m to the sqrt2*cos(jx)
    // basis coefficient (and the sin analogue in the second family block)
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * model.J);
    const double J = static_cast<double>(model.J);
    const double M = static_cast<double>(map.M);
    for (int m = 0; m < map.M; ++m) {
        int j = map.freq_index(m);
        double amp = std::sqrt(J * model.eig(j - 1) / M);
        out(j - 1) += amp * theta(m);
        out(model.J + j - 1) += amp * theta(map.M + m);
    }
    return out;
}

}  // namespace rfs::synth
