#include "rfs/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rfs/common.hpp"

namespace rfs::features {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_inputs(const FeatureMap& map, const Eigen::MatrixXd& X) {
    if (X.cols() != map.d)
        throw std::invalid_argument("apply_features: input has " + std::to_string(X.cols()) +
                                    " columns, map expects " + std::to_string(map.d));
}

}  // namespace

std::string map_kind_name(MapKind k) {
    switch (k) {
        case MapKind::gaussian_rff: return "gaussian-rff";
        case MapKind::ntk: return "ntk";
        case MapKind::model_fourier: return "model-fourier";
    }
    return "?";
}

MapKind map_kind_from_name(const std::string& name) {
    if (name == "gaussian-rff" || name == "rff") return MapKind::gaussian_rff;
    if (name == "ntk") return MapKind::ntk;
    if (name == "model-fourier") return MapKind::model_fourier;
    throw std::invalid_argument("unknown feature map kind: " + name);
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + name);
}

double activation_value(Activation a, double u) {
    switch (a) {
        case Activation::tanh: return std::tanh(u);
        case Activation::relu: return u > 0.0 ? u : 0.0;
    }
    return 0.0;
}

double activation_derivative(Activation a, double u) {
    switch (a) {
        case Activation::tanh: {
            double t = std::tanh(u);
            return 1.0 - t * t;
        }
        case Activation::relu:
            return u > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

std::uint64_t FeatureMap::id() const {
    return seed_hash({static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(p),
                      static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(d), seed});
}

FeatureMap sample_feature_map(MapKind kind, int d, int M, const ScaleConstants& scale,
                              std::uint64_t seed) {
    if (M < 1) throw std::invalid_argument("sample_feature_map: M must be >= 1");
    if (d < 1) throw std::invalid_argument("sample_feature_map: d must be >= 1");
    if (kind == MapKind::model_fourier)
        throw std::invalid_argument("model-fourier maps are sampled from a SyntheticModel");
    if (!(scale.sigma_rff > 0.0) || !(scale.tau > 0.0) || !(scale.gamma > 0.0) ||
        !(scale.input_radius > 0.0))
        throw std::invalid_argument("sample_feature_map: scale constants must be positive");

    FeatureMap map;
    map.kind = kind;
    map.M = M;
    map.d = d;
    map.scale = scale;
    map.seed = seed;
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    if (kind == MapKind::gaussian_rff) {
        map.p = 1;
        map.omega.resize(M, d);
        map.offset.resize(M);
        std::uniform_real_distribution<double> unif(0.0, kTwoPi);
        for (int m = 0; m < M; ++m)
            for (int j = 0; j < d; ++j) map.omega(m, j) = gauss(rng) / scale.sigma_rff;
        for (int m = 0; m < M; ++m) map.offset(m) = unif(rng);
        // sum of 2 cos^2 / M over M features
        map.kappa_sq = 2.0;
    } else {  // ntk
        map.p = d + 2;
        map.omega.resize(M, d);
        for (int m = 0; m < M; ++m)
            for (int j = 0; j < d; ++j) map.omega(m, j) = gauss(rng);
        double B = scale.input_radius;
        double t2 = scale.tau * scale.tau;
        if (scale.activation == Activation::relu) {
            // sup over the input ball: s(w'x)^2 <= |w|^2 B^2, s'(.)^2 <= 1
            double max_w2 = 0.0;
            for (int m = 0; m < M; ++m) max_w2 = std::max(max_w2, map.omega.row(m).squaredNorm());
            map.kappa_sq = B * B * max_w2 + t2 * (B * B + scale.gamma * scale.gamma);
        } else {
            // |tanh| <= 1, |tanh'| <= 1
            map.kappa_sq = 1.0 + t2 * (B * B + scale.gamma * scale.gamma);
        }
    }
    return map;
}

Eigen::MatrixXd apply_features(const FeatureMap& map, const Eigen::MatrixXd& X) {
    check_inputs(map, X);
    const auto n = X.rows();
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(map.M));
    Eigen::MatrixXd Z(n, map.output_dim());

    switch (map.kind) {
        case MapKind::gaussian_rff: {
            Eigen::MatrixXd U = X * map.omega.transpose();  // n x M
            U.rowwise() += map.offset.transpose();
            Z = (std::sqrt(2.0) * inv_sqrt_m) * U.array().cos().matrix();
            break;
        }
        case MapKind::ntk: {
            Eigen::MatrixXd U = X * map.omega.transpose();  // n x M
            Eigen::MatrixXd S(n, map.M), Sp(n, map.M);
            for (Eigen::Index i = 0; i < n; ++i)
                for (int m = 0; m < map.M; ++m) {
                    S(i, m) = activation_value(map.scale.activation, U(i, m));
                    Sp(i, m) = activation_derivative(map.scale.activation, U(i, m));
                }
            const double tau = map.scale.tau;
            for (int j = 0; j < map.d; ++j)
                Z.middleCols(static_cast<Eigen::Index>(j) * map.M, map.M) =
                    (tau * inv_sqrt_m) * (Sp.array().colwise() * X.col(j).array()).matrix();
            Z.middleCols(static_cast<Eigen::Index>(map.d) * map.M, map.M) = inv_sqrt_m * S;
            Z.middleCols(static_cast<Eigen::Index>(map.d + 1) * map.M, map.M) =
                (tau * map.scale.gamma * inv_sqrt_m) * Sp;
            break;
        }
        case MapKind::model_fourier: {
            if (X.cols() != 1)
                throw std::invalid_argument("model-fourier features are defined on d = 1 inputs");
            const double J = static_cast<double>(map.model_eigs.size());
            for (int m = 0; m < map.M; ++m) {
                int j = map.freq_index(m);
                double amp = std::sqrt(2.0 * J * map.model_eigs(j - 1)) * inv_sqrt_m;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double jx = static_cast<double>(j) * X(i, 0);
                    Z(i, m) = amp * std::cos(jx);
                    Z(i, map.M + m) = amp * std::sin(jx);
                }
            }
            break;
        }
    }
    return Z;
}

double rf_kernel(const FeatureMap& map, const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime) {
    if (x.size() != map.d || x_prime.size() != map.d)
        throw std::invalid_argument("rf_kernel: dimension mismatch");
    Eigen::MatrixXd P(2, map.d);
    P.row(0) = x.transpose();
    P.row(1) = x_prime.transpose();
    Eigen::MatrixXd Z = apply_features(map, P);
    return Z.row(0).dot(Z.row(1));
}

Eigen::MatrixXd rf_gram(const FeatureMap& map, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Z = apply_features(map, X);
    return Z * Z.transpose();
}

KernelOracle KernelOracle::for_map(const FeatureMap& map) {
    KernelOracle o;
    switch (map.kind) {
        case MapKind::gaussian_rff:
            o.kind = OracleKind::gaussian_closed_form;
            o.sigma_rff = map.scale.sigma_rff;
            break;
        case MapKind::ntk:
            if (map.scale.activation != Activation::relu)
                throw std::invalid_argument("closed-form NTK limit kernel requires the relu activation");
            o.kind = OracleKind::relu_ntk_closed_form;
            o.tau = map.scale.tau;
            o.gamma = map.scale.gamma;
            break;
        case MapKind::model_fourier:
            o.kind = OracleKind::model_fourier_closed_form;
            o.model_eigs = map.model_eigs;
            break;
    }
    return o;
}

double limit_kernel(const KernelOracle& oracle, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& x_prime) {
    switch (oracle.kind) {
        case OracleKind::gaussian_closed_form: {
            double s2 = oracle.sigma_rff * oracle.sigma_rff;
            return std::exp(-(x - x_prime).squaredNorm() / (2.0 * s2));
        }
        case OracleKind::relu_ntk_closed_form: {
            // arc-cosine forms under w ~ N(0, I):
            //   E[relu(w'x) relu(w'x')]  = |x||x'| (sin g + (pi-g) cos g) / (2 pi)
            //   E[relu'(w'x) relu'(w'x')] = (pi - g) / (2 pi),  g = angle(x, x')
            double nx = x.norm(), ny = x_prime.norm();
            if (nx == 0.0 || ny == 0.0) return 0.0;
            double c = x.dot(x_prime) / (nx * ny);
            c = std::clamp(c, -1.0, 1.0);
            double g = std::acos(c);
            double k1 = nx * ny * (std::sin(g) + (std::numbers::pi - g) * c) / kTwoPi;
            double k0 = (std::numbers::pi - g) / kTwoPi;
            return k1 + oracle.tau * oracle.tau * (x.dot(x_prime) + oracle.gamma * oracle.gamma) * k0;
        }
        case OracleKind::model_fourier_closed_form: {
            if (x.size() != 1 || x_prime.size() != 1)
                throw std::invalid_argument("model-fourier limit kernel is defined on d = 1 inputs");
            double delta = x(0) - x_prime(0);
            double k = 0.0;
            for (Eigen::Index j = 0; j < oracle.model_eigs.size(); ++j)
                k += 2.0 * oracle.model_eigs(j) * std::cos(static_cast<double>(j + 1) * delta);
            return k;
        }
    }
    throw std::invalid_argument("unsupported oracle kind");
}

}  // namespace rfs::features
