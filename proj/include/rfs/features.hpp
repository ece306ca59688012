#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace rfs::features {

enum class MapKind { gaussian_rff, ntk, model_fourier };
enum class Activation { tanh, relu };

std::string map_kind_name(MapKind k);
MapKind map_kind_from_name(const std::string& name);
Activation activation_from_name(const std::string& name);

struct ScaleConstants {
    double sigma_rff = 1.0;    // Gaussian kernel bandwidth
    double tau = 1.0;          // NTK output scale
    double gamma = 1.0;        // NTK bias scale
    double input_radius = 1.0; // radius of the admissible input ball (NTK)
    Activation activation = Activation::tanh;
};

// A sampled random feature map x -> Phi_M(x) in R^{p*M}. Immutable after
// sampling; identical (kind, dims, scale constants, seed) reproduce identical
// draws. Rows of apply_features carry the 1/sqrt(M) prefactor, so
// K_M(x,x') = <row(x), row(x')> exactly.
struct FeatureMap {
    MapKind kind = MapKind::gaussian_rff;
    int p = 1;   // number of feature families
    int M = 0;   // features per family
    int d = 0;   // input dimension
    Eigen::MatrixXd omega;          // M x d frequency/weight rows (gaussian-rff, ntk)
    Eigen::VectorXd offset;         // M offsets in [0,2pi) (gaussian-rff)
    Eigen::VectorXi freq_index;     // M sampled frequency indices in 1..J (model-fourier)
    Eigen::VectorXd model_eigs;     // J model eigenvalues (model-fourier)
    ScaleConstants scale;
    double kappa_sq = 0.0;          // bound on sum_i |phi^(i)(x,omega_m)|^2 over the input domain
    std::uint64_t seed = 0;

    int output_dim() const { return p * M; }
    // stable identity for pairing maps with estimator states
    std::uint64_t id() const;
};

// Draws a feature map. Supported kinds here: gaussian-rff (p=1, feature
// sqrt(2) cos(w'x + b), w ~ N(0, I/sigma^2), b ~ U[0,2pi)) and ntk
// (p = d+2, w ~ N(0, I), families tau*x_i*s'(w'x), s(w'x), tau*gamma*s'(w'x)).
// Model-fourier maps are built by synth::model_features.
FeatureMap sample_feature_map(MapKind kind, int d, int M, const ScaleConstants& scale,
                              std::uint64_t seed);

// Row i is the concatenation of the p family blocks for X.row(i), each entry
// scaled by 1/sqrt(M). Result is n x (p*M).
Eigen::MatrixXd apply_features(const FeatureMap& map, const Eigen::MatrixXd& X);

// K_M(x, x') = <Phi(x), Phi(x')>.
double rf_kernel(const FeatureMap& map, const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime);

// Full Gram matrix [K_M(x_i, x_j)] = Z Z'.
Eigen::MatrixXd rf_gram(const FeatureMap& map, const Eigen::MatrixXd& X);

enum class OracleKind { gaussian_closed_form, relu_ntk_closed_form, model_fourier_closed_form };

// Closed-form limit kernel K_inf paired with a feature map.
struct KernelOracle {
    OracleKind kind = OracleKind::gaussian_closed_form;
    double sigma_rff = 1.0;
    double tau = 1.0;
    double gamma = 1.0;
    Eigen::VectorXd model_eigs;

    // Throws for maps without a closed form (ntk with a smooth activation).
    static KernelOracle for_map(const FeatureMap& map);
};

double limit_kernel(const KernelOracle& oracle, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& x_prime);

double activation_value(Activation a, double u);
double activation_derivative(Activation a, double u);

}  // namespace rfs::features
