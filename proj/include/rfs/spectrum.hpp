#pragma once

#include <Eigen/Dense>

#include "rfs/filters.hpp"

namespace rfs::spectrum {

// Source regularity and capacity parameters driving the schedules.
struct TheoryParams {
    double r = 0.5;       // source smoothness
    double b = 1.0;       // effective-dimension exponent
    double R = 1.0;       // source norm bound
    double c_b = 1.0;     // capacity constant
    double C_lambda = 1.0;
    double C_M = 1.0;
    double delta = 0.1;

    void validate() const;  // throws unless 2r + b > 1 and all constants positive
};

// N(lambda) = sum_i mu_i / (mu_i + lambda).
double effective_dimension(const Eigen::VectorXd& eigs, double lambda);

// Least-squares slope s of log(mu_i) vs log(i) over the index window
// [lo, hi] (1-based, inclusive); returns b_hat = -1/s. hi <= 0 selects the
// default window end max(n/4, lo+9).
double fit_spectral_decay(const Eigen::VectorXd& eigs, int lo = 5, int hi = 0);

struct Schedule {
    double lambda = 0.0;
    long M = 0;
    long k = 0;  // iteration count; 0 for explicit (tikhonov) regularization
};

// Smallest n the schedule accepts.
double schedule_n0(const TheoryParams& p);

// lambda(n) = C_lambda n^{-1/(2r+b)}; M(n) = ceil(C_M log(n) n^e) with the
// regime exponent e(r, b); k(n) = ceil(1/lambda) for lambda = 1/k methods and
// ceil(1/sqrt(lambda)) for lambda = 1/k^2 methods.
Schedule theory_schedule(long n, const TheoryParams& params,
                         filters::Method method = filters::Method::landweber);

// The M(n) exponent: 1/(2r+b) for r < 1/2, (1+b(2r-1))/(2r+b) for r in [1/2,1],
// 2r/(2r+b) for r > 1.
double feature_count_exponent(double r, double b);

}  // namespace rfs::spectrum
