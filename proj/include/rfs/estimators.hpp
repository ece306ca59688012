#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

#include "rfs/features.hpp"
#include "rfs/filters.hpp"

namespace rfs::estimators {

// Fitted parameter vector in feature space, theta in R^{p*M}.
struct EstimatorState {
    Eigen::VectorXd theta;
    Eigen::VectorXd theta_prev;  // momentum methods
    int iteration = 0;
    filters::FilterSpec filter;
    std::uint64_t map_id = 0;

    void save(std::ostream& os) const;  // flat text: header with dims, one value per line
    static EstimatorState load(std::istream& is);
};

// Eigendecomposition of a PSD Gram matrix divided by n. Eigenvalues sorted
// nonincreasing; values in [-tol*trace, 0) are clamped to zero, anything more
// negative is rejected.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    static SpectralDecomposition compute(const Eigen::MatrixXd& K_over_n,
                                         double negative_tol = 1e-6);
    double max_reconstruction_error(const Eigen::MatrixXd& K_over_n) const;
};

// Closed-form KRR in feature space: theta = (Phi'Phi/n + lambda I)^{-1} Phi'y/n.
EstimatorState fit_rf_krr(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda,
                          std::uint64_t map_id = 0);

// Iterative fit, theta_{k+1} = theta_k - (alpha/n) Phi'(Phi theta_k - y)
// + beta (theta_k - theta_{k-1}); nesterov uses the lookahead variant. Runs
// exactly filter.k iterations from theta_0 = theta_{-1} = 0.
EstimatorState fit_rf_iterative(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                const filters::FilterSpec& filter, std::uint64_t map_id = 0);

// Stepwise iterative fit for snapshotting along one trajectory (heat-grid T
// sweeps reuse a single run instead of refitting per T).
class IterativeTrajectory {
  public:
    IterativeTrajectory(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                        const filters::FilterSpec& filter, std::uint64_t map_id = 0);
    void advance_to(int iteration);
    int iteration() const { return iteration_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    EstimatorState state() const;

  private:
    const Eigen::MatrixXd& Phi_;
    const Eigen::VectorXd& y_;
    filters::FilterSpec filter_;
    std::uint64_t map_id_;
    Eigen::VectorXd theta_, theta_prev_;
    int iteration_ = 0;
    double guard_ = 0.0;
};

// Kernel-space oracle: alpha = (1/n) phi_lambda(K/n) y via eigendecomposition,
// so that f(x) = sum_i alpha_i K(x_i, x). n is capped (dense O(n^3) path).
Eigen::VectorXd fit_kernel_oracle(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                                  const filters::FilterSpec& filter, Eigen::Index n_cap = 2000);

// Phi_M(X) * theta. Checks that the map matches the state (when both carry ids).
Eigen::VectorXd predict(const features::FeatureMap& map, const EstimatorState& state,
                        const Eigen::MatrixXd& X);

// Largest eigenvalue of Phi'Phi/n by power iteration (on the smaller side of
// the product). Used for automatic step sizes.
double covariance_spectral_norm(const Eigen::MatrixXd& Phi, int iters = 60);

// Default step size per the map's declared feature-norm bound.
inline double default_alpha(double kappa_sq) { return 0.5 / kappa_sq; }

}  // namespace rfs::estimators
