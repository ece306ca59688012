#include "rfs/estimators.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rfs::estimators {

namespace {

void check_finite(const Eigen::MatrixXd& A, const char* what) {
    if (!A.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite values");
}

}  // namespace

void EstimatorState::save(std::ostream& os) const {
    os << "rfs-estimator-state 1\n";
    os << theta.size() << ' ' << iteration << ' ' << static_cast<int>(filter.method) << ' '
       << map_id << '\n';
    os.precision(17);
    os << filter.lambda << ' ' << filter.alpha << ' ' << filter.beta << ' ' << filter.k << '\n';
    for (Eigen::Index i = 0; i < theta.size(); ++i) os << theta(i) << '\n';
    for (Eigen::Index i = 0; i < theta_prev.size(); ++i) os << theta_prev(i) << '\n';
}

EstimatorState EstimatorState::load(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "rfs-estimator-state" || version != 1)
        throw std::runtime_error("EstimatorState::load: unrecognized header");
    EstimatorState st;
    Eigen::Index dim = 0;
    int method = 0;
    is >> dim >> st.iteration >> method >> st.map_id;
    st.filter.method = static_cast<filters::Method>(method);
    is >> st.filter.lambda >> st.filter.alpha >> st.filter.beta >> st.filter.k;
    st.theta.resize(dim);
    st.theta_prev.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) is >> st.theta(i);
    for (Eigen::Index i = 0; i < dim; ++i) is >> st.theta_prev(i);
    if (!is) throw std::runtime_error("EstimatorState::load: truncated stream");
    return st;
}

SpectralDecomposition SpectralDecomposition::compute(const Eigen::MatrixXd& K_over_n,
                                                     double negative_tol) {
    if (K_over_n.rows() != K_over_n.cols())
        throw std::invalid_argument("SpectralDecomposition: matrix must be square");
    check_finite(K_over_n, "SpectralDecomposition");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K_over_n);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("SpectralDecomposition: eigendecomposition failed");

    double trace = K_over_n.trace();
    double floor = -negative_tol * std::max(trace, 0.0);
    SpectralDecomposition out;
    const Eigen::Index n = K_over_n.rows();
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    // Eigen returns ascending order; store nonincreasing
    for (Eigen::Index i = 0; i < n; ++i) {
        double ev = es.eigenvalues()(n - 1 - i);
        if (ev < floor)
            throw std::runtime_error("SpectralDecomposition: eigenvalue " + std::to_string(ev) +
                                     " below PSD tolerance");
        out.eigenvalues(i) = ev < 0.0 ? 0.0 : ev;
        out.eigenvectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

double SpectralDecomposition::max_reconstruction_error(const Eigen::MatrixXd& K_over_n) const {
    Eigen::MatrixXd R = eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    return (R - K_over_n).cwiseAbs().maxCoeff();
}

EstimatorState fit_rf_krr(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda,
                          std::uint64_t map_id) {
    if (!(lambda > 0.0)) throw std::invalid_argument("fit_rf_krr: lambda must be positive");
    if (Phi.rows() != y.size()) throw std::invalid_argument("fit_rf_krr: row count mismatch");
    if (Phi.rows() < 1) throw std::invalid_argument("fit_rf_krr: empty sample");
    check_finite(Phi, "fit_rf_krr Phi");
    check_finite(y, "fit_rf_krr y");

    const double n = static_cast<double>(Phi.rows());
    const Eigen::Index D = Phi.cols();
    Eigen::MatrixXd A = (Phi.transpose() * Phi) / n;
    A.diagonal().array() += lambda;
    Eigen::VectorXd b = Phi.transpose() * y / n;

    EstimatorState st;
    st.theta = Eigen::LDLT<Eigen::MatrixXd>(A).solve(b);
    st.theta_prev = Eigen::VectorXd::Zero(D);
    st.iteration = 0;
    st.filter = filters::FilterSpec::tikhonov(std::min(lambda, 1.0));
    st.filter.lambda = lambda;  // keep the requested value even if > 1
    st.map_id = map_id;
    return st;
}

IterativeTrajectory::IterativeTrajectory(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                         const filters::FilterSpec& filter, std::uint64_t map_id)
    : Phi_(Phi), y_(y), filter_(filter), map_id_(map_id) {
    if (!filter.iterative())
        throw std::invalid_argument("fit_rf_iterative: filter must be an iterative method");
    if (filter.k < 1) throw std::invalid_argument("fit_rf_iterative: k must be >= 1");
    if (!(filter.alpha > 0.0)) throw std::invalid_argument("fit_rf_iterative: alpha must be positive");
    if (Phi.rows() != y.size()) throw std::invalid_argument("fit_rf_iterative: row count mismatch");
    check_finite(Phi, "fit_rf_iterative Phi");
    check_finite(y, "fit_rf_iterative y");
    theta_ = Eigen::VectorXd::Zero(Phi.cols());
    theta_prev_ = Eigen::VectorXd::Zero(Phi.cols());
    guard_ = 1e6 * (1.0 + y.norm());
}

void IterativeTrajectory::advance_to(int iteration) {
    const double n = static_cast<double>(Phi_.rows());
    Eigen::VectorXd grad, lookahead;
    while (iteration_ < iteration) {
        Eigen::VectorXd next;
        if (filter_.method == filters::Method::nesterov) {
            double mu = (static_cast<double>(iteration_) - 1.0) / (static_cast<double>(iteration_) + 2.0);
            lookahead = theta_ + mu * (theta_ - theta_prev_);
            grad = Phi_.transpose() * (Phi_ * lookahead - y_) / n;
            next = lookahead - filter_.alpha * grad;
        } else {
            grad = Phi_.transpose() * (Phi_ * theta_ - y_) / n;
            next = theta_ - filter_.alpha * grad + filter_.beta * (theta_ - theta_prev_);
        }
        theta_prev_.swap(theta_);
        theta_ = std::move(next);
        ++iteration_;
        if (!theta_.allFinite() || theta_.norm() > guard_)
            throw std::runtime_error("fit_rf_iterative: divergence at iteration " +
                                     std::to_string(iteration_) +
                                     " (step size too large for this spectrum)");
    }
}

EstimatorState IterativeTrajectory::state() const {
    EstimatorState st;
    st.theta = theta_;
    st.theta_prev = theta_prev_;
    st.iteration = iteration_;
    st.filter = filter_;
    st.filter.k = iteration_;
    if (st.filter.k >= 1) {
        double kk = static_cast<double>(st.filter.k);
        st.filter.lambda =
            st.filter.method == filters::Method::landweber ? 1.0 / kk : 1.0 / (kk * kk);
    }
    st.map_id = map_id_;
    return st;
}

EstimatorState fit_rf_iterative(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                const filters::FilterSpec& filter, std::uint64_t map_id) {
    IterativeTrajectory traj(Phi, y, filter, map_id);
    traj.advance_to(filter.k);
    return traj.state();
}

Eigen::VectorXd fit_kernel_oracle(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                                  const filters::FilterSpec& filter, Eigen::Index n_cap) {
    const Eigen::Index n = K.rows();
    if (n != K.cols() || n != y.size())
        throw std::invalid_argument("fit_kernel_oracle: dimension mismatch");
    if (n > n_cap)
        throw std::invalid_argument("fit_kernel_oracle: n exceeds the dense oracle cap");
    double sym = (K - K.transpose()).cwiseAbs().maxCoeff();
    if (sym > 1e-8 * std::max(1.0, K.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("fit_kernel_oracle: K is not symmetric");

    SpectralDecomposition dec = SpectralDecomposition::compute(K / static_cast<double>(n));
    Eigen::VectorXd phi_vals(n);
    for (Eigen::Index i = 0; i < n; ++i) phi_vals(i) = filters::filter_value(filter, dec.eigenvalues(i));
    Eigen::VectorXd proj = dec.eigenvectors.transpose() * y;
    proj.array() *= phi_vals.array();
    return dec.eigenvectors * proj / static_cast<double>(n);
}

Eigen::VectorXd predict(const features::FeatureMap& map, const EstimatorState& state,
                        const Eigen::MatrixXd& X) {
    if (state.map_id != 0 && map.id() != state.map_id)
        throw std::invalid_argument("predict: feature map does not match the fitted state");
    if (map.output_dim() != state.theta.size())
        throw std::invalid_argument("predict: theta length does not match the map output dim");
    return features::apply_features(map, X) * state.theta;
}

double covariance_spectral_norm(const Eigen::MatrixXd& Phi, int iters) {
    const double n = static_cast<double>(Phi.rows());
    const Eigen::Index D = Phi.cols();
    if (Phi.size() == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(D);
    v.normalize();
    double ev = 0.0;
    for (int i = 0; i < iters; ++i) {
        Eigen::VectorXd w = Phi.transpose() * (Phi * v) / n;
        double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        ev = norm;
    }
    return ev;
}

}  // namespace rfs::estimators
