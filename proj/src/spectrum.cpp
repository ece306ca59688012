#include "rfs/spectrum.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfs::spectrum {

void TheoryParams::validate() const {
    if (!(r > 0.0)) throw std::invalid_argument("TheoryParams: r must be positive");
    if (!(b >= 0.0) || b > 1.0) throw std::invalid_argument("TheoryParams: b must lie in [0,1]");
    if (!(2.0 * r + b > 1.0))
        throw std::invalid_argument("TheoryParams: need 2r + b > 1 (hard regime is out of scope)");
    if (!(R > 0.0) || !(c_b > 0.0) || !(C_lambda > 0.0) || !(C_M > 0.0))
        throw std::invalid_argument("TheoryParams: constants must be positive");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("TheoryParams: delta must lie in (0,1)");
}

double effective_dimension(const Eigen::VectorXd& eigs, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("effective_dimension: lambda must be positive");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        double mu = eigs(i);
        if (mu < 0.0) throw std::invalid_argument("effective_dimension: negative eigenvalue");
        acc += mu / (mu + lambda);
    }
    return acc;
}

double fit_spectral_decay(const Eigen::VectorXd& eigs, int lo, int hi) {
    const int n = static_cast<int>(eigs.size());
    if (lo < 1) throw std::invalid_argument("fit_spectral_decay: window start must be >= 1");
    if (hi <= 0) hi = std::max(n / 4, lo + 9);
    hi = std::min(hi, n);
    if (hi - lo + 1 < 10)
        throw std::invalid_argument("fit_spectral_decay: window holds fewer than 10 eigenvalues");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int i = lo; i <= hi; ++i) {
        double mu = eigs(i - 1);
        if (!(mu > 0.0))
            throw std::invalid_argument("fit_spectral_decay: nonpositive eigenvalue at index " +
                                        std::to_string(i));
        double x = std::log(static_cast<double>(i));
        double y = std::log(mu);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    double denom = count * sxx - sx * sx;
    double slope = (count * sxy - sx * sy) / denom;
    if (!(slope < 0.0))
        throw std::invalid_argument("fit_spectral_decay: spectrum is not decaying on the window");
    return -1.0 / slope;
}

double feature_count_exponent(double r, double b) {
    if (r < 0.5) return 1.0 / (2.0 * r + b);
    if (r <= 1.0) return (1.0 + b * (2.0 * r - 1.0)) / (2.0 * r + b);
    return 2.0 * r / (2.0 * r + b);
}

double schedule_n0(const TheoryParams& p) {
    double s = 2.0 * p.r + p.b;
    return std::exp(s / (s - 1.0));
}

Schedule theory_schedule(long n, const TheoryParams& params, filters::Method method) {
    params.validate();
    double n0 = schedule_n0(params);
    if (static_cast<double>(n) < n0)
        throw std::invalid_argument("theory_schedule: n = " + std::to_string(n) +
                                    " is below the admissible n0 = " + std::to_string(n0));
    double s = 2.0 * params.r + params.b;
    double nn = static_cast<double>(n);
    Schedule out;
    out.lambda = params.C_lambda * std::pow(nn, -1.0 / s);
    double e = feature_count_exponent(params.r, params.b);
    out.M = static_cast<long>(std::ceil(params.C_M * std::log(nn) * std::pow(nn, e)));
    switch (method) {
        case filters::Method::tikhonov:
            out.k = 0;
            break;
        case filters::Method::landweber:
            out.k = static_cast<long>(std::ceil(1.0 / out.lambda));
            break;
        case filters::Method::heavy_ball:
        case filters::Method::nesterov:
            out.k = static_cast<long>(std::ceil(1.0 / std::sqrt(out.lambda)));
            break;
    }
    return out;
}

}  // namespace rfs::spectrum
