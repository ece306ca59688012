#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rfs/dataset.hpp"
#include "rfs/features.hpp"

namespace rfs::synth {

// Synthetic regression problem on the circle with exactly known spectrum and
// source regularity: inputs uniform on [0, 2pi], kernel
// K(x,x') = sum_j 2 lambda_j cos(j(x-x')) with lambda_j = j^{-1/b} (lambda_1
// normalized to 1), target g(x) = sum_j lambda_j^r (c_j sqrt2 cos(jx) +
// s_j sqrt2 sin(jx)) with sum(c^2 + s^2) = R^2.
struct SyntheticModel {
    int J = 0;
    double b = 1.0;
    double r = 0.5;
    double R = 1.0;
    double noise_sigma = 0.0;
    Eigen::VectorXd eig;  // lambda_1..lambda_J
    Eigen::VectorXd c;    // h-coefficients, cos part
    Eigen::VectorXd s;    // h-coefficients, sin part
    std::uint64_t seed = 0;

    // target coefficients in the orthonormal basis: (lambda_j^r c_j, lambda_j^r s_j)
    Eigen::VectorXd target_coeffs() const;  // length 2J: cos block then sin block
    double target_l2_norm() const;
    std::string to_csv() const;  // j, eig_j, c_j, s_j
};

SyntheticModel build_model(int J, double b, double r, double R, double noise_sigma,
                           std::uint64_t seed);

Dataset sample_synthetic(const SyntheticModel& model, Eigen::Index n, std::uint64_t seed);

double true_target(const SyntheticModel& model, double x);

// ||g - estimate||_{L^2(rho_x)} by Parseval; est_coeffs holds the estimate's
// coefficients in the orthonormal basis, cos block then sin block (length 2J).
double analytic_l2_error(const SyntheticModel& model, const Eigen::VectorXd& est_coeffs);

// N(lambda) = sum_j 2 lambda_j / (lambda_j + lambda), the analytic effective
// dimension (each frequency carries a cos and a sin eigenfunction).
double analytic_effective_dimension(const SyntheticModel& model, double lambda);

// Smallest c such that N(lambda) <= c lambda^{-b} over the given lambda grid.
double fit_capacity_constant(const SyntheticModel& model, const std::vector<double>& lambda_grid);

// Random feature map for the model kernel: indices j_m uniform on {1..J},
// families sqrt(2 J lambda_j) cos(jx), sqrt(2 J lambda_j) sin(jx) (p = 2).
features::FeatureMap model_features(const SyntheticModel& model, int M, std::uint64_t seed);

// Orthonormal-basis coefficients of x -> Phi_M(x)' theta for a model-fourier map.
Eigen::VectorXd estimate_coeffs(const SyntheticModel& model, const features::FeatureMap& map,
                                const Eigen::VectorXd& theta);

}  // namespace rfs::synth
