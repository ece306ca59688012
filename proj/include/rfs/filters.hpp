#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rfs::filters {

enum class Method { tikhonov, landweber, heavy_ball, nesterov };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Declared constants of a filter family: sup|t phi| <= D, sup|phi| <= E/lambda,
// sup|r| <= c0, and qualification nu with sup|r(t)| t^q <= c_q lambda^q for q <= nu.
struct DeclaredConstants {
    double D;
    double E;
    double c0;
    double nu;  // +inf encoded as std::numeric_limits<double>::infinity()
};

// One spectral filter instance. For iterative methods lambda is derived from
// the iteration count: lambda = 1/k (landweber) or 1/k^2 (heavy-ball, nesterov).
struct FilterSpec {
    Method method = Method::tikhonov;
    double lambda = 1.0;  // in (0,1]
    double alpha = 1.0;   // step size, iterative methods
    double beta = 0.0;    // momentum, heavy-ball only
    int k = 1;            // iteration count, iterative methods

    static FilterSpec tikhonov(double lambda);
    static FilterSpec landweber(int k, double alpha = 1.0);
    static FilterSpec heavy_ball(int k, double alpha = 1.0, double beta = 0.25);
    static FilterSpec nesterov(int k, double alpha = 1.0);

    bool iterative() const { return method != Method::tikhonov; }
    DeclaredConstants declared() const;
    // c_q where the source literature states it; nullopt for heavy-ball q>0
    // and nesterov (reported, not gated).
    std::optional<double> declared_cq(double q) const;
};

// phi_lambda(t) for t >= 0 (t = 0 evaluated by its limit, e.g. k*alpha for
// landweber). Throws on t < 0.
double filter_value(const FilterSpec& spec, double t);

// r_lambda(t) = 1 - t*phi_lambda(t), via the stable per-method form.
double residual_value(const FilterSpec& spec, double t);

// Evaluates the whole iterate path at one spectral point: phi_j(t) for
// j = 1..k_max. Cheap way to sweep iteration grids (one recurrence pass).
std::vector<double> filter_path(Method method, double alpha, double beta, int k_max, double t);
std::vector<double> residual_path(Method method, double alpha, double beta, int k_max, double t);

struct FilterCheckRow {
    std::string method;
    double lambda = 0.0;
    double q = 0.0;
    double sup_tphi = 0.0;
    double sup_lamphi = 0.0;  // lambda * sup|phi|
    double sup_resid = 0.0;
    double emp_cq = 0.0;      // sup_t |r(t)| t^q / lambda^q
    bool gated = false;       // whether declared constants exist to gate against
    bool pass = true;         // meaningful only when gated
};

struct FilterReport {
    std::vector<FilterCheckRow> rows;
    bool all_gated_pass() const;
    // family-level empirical c_q: max over lambda of the per-lambda ratio
    double family_cq(double q) const;
    double family_sup_tphi() const;
    std::string to_csv() const;  // method, lambda, q, sup_tphi, sup_lamphi, sup_resid, emp_cq, pass
};

// Numerical slack applied to every declared-constant gate.
inline constexpr double kVerifySlack = 1.01;

// Checks the regularization-function bounds and qualification ratios of one
// family over t_grid x lambda_grid, for each exponent in q_list. For iterative
// methods lambda values are snapped to the nearest admissible 1/k resp. 1/k^2.
FilterReport verify_filter(Method method, double alpha, double beta,
                           const std::vector<double>& t_grid,
                           const std::vector<double>& lambda_grid,
                           const std::vector<double>& q_list);

// Geometric grid inside (lo, hi], convenience for verification sweeps.
std::vector<double> log_grid(double lo, double hi, int count);

// lambda values of an iteration-count sweep: 1/k or 1/k^2 per method.
std::vector<double> lambda_grid_from_iterations(Method method, const std::vector<int>& ks);

}  // namespace rfs::filters
