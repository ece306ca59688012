#include "rfs/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rfs::filters {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_spec(const FilterSpec& s) {
    if (!(s.lambda > 0.0) || s.lambda > 1.0)
        throw std::invalid_argument("FilterSpec: lambda must lie in (0,1]");
    if (s.iterative()) {
        if (s.k < 1) throw std::invalid_argument("FilterSpec: iteration count k must be >= 1");
        if (!(s.alpha > 0.0)) throw std::invalid_argument("FilterSpec: alpha must be positive");
    }
    if (s.method == Method::heavy_ball && (s.beta < 0.0 || s.beta >= 1.0))
        throw std::invalid_argument("FilterSpec: heavy-ball beta must lie in [0,1)");
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::tikhonov: return "tikhonov";
        case Method::landweber: return "landweber";
        case Method::heavy_ball: return "heavy-ball";
        case Method::nesterov: return "nesterov";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "tikhonov" || name == "krr") return Method::tikhonov;
    if (name == "landweber" || name == "gd" || name == "gradient-descent") return Method::landweber;
    if (name == "heavy-ball" || name == "heavyball" || name == "hb") return Method::heavy_ball;
    if (name == "nesterov") return Method::nesterov;
    throw std::invalid_argument("unknown filter method: " + name);
}

FilterSpec FilterSpec::tikhonov(double lambda) {
    FilterSpec s;
    s.method = Method::tikhonov;
    s.lambda = lambda;
    check_spec(s);
    return s;
}

FilterSpec FilterSpec::landweber(int k, double alpha) {
    FilterSpec s;
    s.method = Method::landweber;
    s.k = k;
    s.alpha = alpha;
    s.lambda = 1.0 / static_cast<double>(k);
    check_spec(s);
    return s;
}

FilterSpec FilterSpec::heavy_ball(int k, double alpha, double beta) {
    FilterSpec s;
    s.method = Method::heavy_ball;
    s.k = k;
    s.alpha = alpha;
    s.beta = beta;
    s.lambda = 1.0 / (static_cast<double>(k) * static_cast<double>(k));
    check_spec(s);
    return s;
}

FilterSpec FilterSpec::nesterov(int k, double alpha) {
    FilterSpec s;
    s.method = Method::nesterov;
    s.k = k;
    s.alpha = alpha;
    s.lambda = 1.0 / (static_cast<double>(k) * static_cast<double>(k));
    check_spec(s);
    return s;
}

DeclaredConstants FilterSpec::declared() const {
    switch (method) {
        case Method::tikhonov:
            return {1.0, 1.0, 1.0, 1.0};
        case Method::landweber:
            // sup|t phi| = 1-(1-alpha t)^k <= 1, which collapses to alpha only
            // when alpha >= 1; E = alpha is exact (sup phi = alpha k = alpha/lambda).
            return {std::max(1.0, alpha), alpha, 1.0, kInf};
        case Method::heavy_ball:
            return {2.0, 2.0, 2.0, kInf};
        case Method::nesterov:
            // no constants declared; verification reports without gating
            return {kInf, kInf, kInf, kInf};
    }
    return {kInf, kInf, kInf, kInf};
}

std::optional<double> FilterSpec::declared_cq(double q) const {
    switch (method) {
        case Method::tikhonov:
            return q <= 1.0 ? std::optional<double>(1.0) : std::nullopt;
        case Method::landweber:
            return q == 0.0 ? 1.0 : std::pow(q / alpha, q);
        case Method::heavy_ball:
            // qualification holds with an unspecified constant; gate only q = 0
            return q == 0.0 ? std::optional<double>(2.0) : std::nullopt;
        case Method::nesterov:
            return std::nullopt;
    }
    return std::nullopt;
}

namespace {

double landweber_phi(double alpha, int k, double t) {
    double at = alpha * t;
    if (t == 0.0) return alpha * static_cast<double>(k);
    if (at < 1.0) {
        // phi = (1 - (1-at)^k)/t without cancellation
        return -std::expm1(static_cast<double>(k) * std::log1p(-at)) / t;
    }
    return (1.0 - std::pow(1.0 - at, static_cast<double>(k))) / t;
}

double landweber_residual(double alpha, int k, double t) {
    return std::pow(1.0 - alpha * t, static_cast<double>(k));
}

// phi recurrences, valid at t = 0 as well:
//   heavy-ball: phi_{j+1} = alpha + (1+beta-alpha t) phi_j - beta phi_{j-1}
//   nesterov:   phi_{j+1} = alpha + (1-alpha t)(phi_j + mu_j (phi_j - phi_{j-1})),
//               mu_j = (j-1)/(j+2)
// with phi_0 = phi_{-1} = 0; residuals satisfy the matching recurrences with
// r_0 = r_{-1} = 1.
template <typename Emit>
void momentum_phi_walk(Method method, double alpha, double beta, int k_max, double t, Emit emit) {
    double prev = 0.0, cur = 0.0;
    for (int j = 0; j < k_max; ++j) {
        double next;
        if (method == Method::heavy_ball || method == Method::landweber) {
            next = alpha + (1.0 + beta - alpha * t) * cur - beta * prev;
        } else {  // nesterov
            double mu = (static_cast<double>(j) - 1.0) / (static_cast<double>(j) + 2.0);
            next = alpha + (1.0 - alpha * t) * (cur + mu * (cur - prev));
        }
        prev = cur;
        cur = next;
        emit(j + 1, cur);
    }
}

template <typename Emit>
void momentum_residual_walk(Method method, double alpha, double beta, int k_max, double t, Emit emit) {
    double prev = 1.0, cur = 1.0;
    for (int j = 0; j < k_max; ++j) {
        double next;
        if (method == Method::heavy_ball || method == Method::landweber) {
            next = (1.0 + beta - alpha * t) * cur - beta * prev;
        } else {
            double mu = (static_cast<double>(j) - 1.0) / (static_cast<double>(j) + 2.0);
            next = (1.0 - alpha * t) * ((1.0 + mu) * cur - mu * prev);
        }
        prev = cur;
        cur = next;
        emit(j + 1, cur);
    }
}

}  // namespace

double filter_value(const FilterSpec& spec, double t) {
    check_spec(spec);
    if (t < 0.0) throw std::invalid_argument("filter_value: t must be nonnegative");
    switch (spec.method) {
        case Method::tikhonov:
            return 1.0 / (t + spec.lambda);
        case Method::landweber:
            return landweber_phi(spec.alpha, spec.k, t);
        case Method::heavy_ball:
        case Method::nesterov: {
            double out = 0.0;
            momentum_phi_walk(spec.method, spec.alpha, spec.beta, spec.k, t,
                              [&](int j, double v) { if (j == spec.k) out = v; });
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

double residual_value(const FilterSpec& spec, double t) {
    check_spec(spec);
    if (t < 0.0) throw std::invalid_argument("residual_value: t must be nonnegative");
    switch (spec.method) {
        case Method::tikhonov:
            return spec.lambda / (t + spec.lambda);
        case Method::landweber:
            return landweber_residual(spec.alpha, spec.k, t);
        case Method::heavy_ball:
        case Method::nesterov: {
            double out = 1.0;
            momentum_residual_walk(spec.method, spec.alpha, spec.beta, spec.k, t,
                                   [&](int j, double v) { if (j == spec.k) out = v; });
            return out;
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<double> filter_path(Method method, double alpha, double beta, int k_max, double t) {
    if (k_max < 1) throw std::invalid_argument("filter_path: k_max must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(k_max));
    momentum_phi_walk(method, alpha, beta, k_max, t,
                      [&](int j, double v) { out[static_cast<std::size_t>(j - 1)] = v; });
    return out;
}

std::vector<double> residual_path(Method method, double alpha, double beta, int k_max, double t) {
    if (k_max < 1) throw std::invalid_argument("residual_path: k_max must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(k_max));
    momentum_residual_walk(method, alpha, beta, k_max, t,
                           [&](int j, double v) { out[static_cast<std::size_t>(j - 1)] = v; });
    return out;
}

bool FilterReport::all_gated_pass() const {
    for (const auto& r : rows)
        if (r.gated && !r.pass) return false;
    return true;
}

double FilterReport::family_cq(double q) const {
    double m = 0.0;
    for (const auto& r : rows)
        if (r.q == q) m = std::max(m, r.emp_cq);
    return m;
}

double FilterReport::family_sup_tphi() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.sup_tphi);
    return m;
}

std::string FilterReport::to_csv() const {
    std::ostringstream os;
    os << "method,lambda,q,sup_tphi,sup_lamphi,sup_resid,emp_cq,pass\n";
    os.precision(12);
    for (const auto& r : rows) {
        os << r.method << ',' << r.lambda << ',' << r.q << ',' << r.sup_tphi << ','
           << r.sup_lamphi << ',' << r.sup_resid << ',' << r.emp_cq << ','
           << (r.gated ? (r.pass ? "1" : "0") : "") << '\n';
    }
    return os.str();
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
        throw std::invalid_argument("log_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> g(static_cast<std::size_t>(count));
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < count; ++i)
        g[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(count - 1));
    g.back() = hi;
    return g;
}

std::vector<double> lambda_grid_from_iterations(Method method, const std::vector<int>& ks) {
    std::vector<double> g;
    g.reserve(ks.size());
    for (int k : ks) {
        if (k < 1) throw std::invalid_argument("iteration counts must be >= 1");
        double kk = static_cast<double>(k);
        g.push_back(method == Method::landweber ? 1.0 / kk : 1.0 / (kk * kk));
    }
    return g;
}

namespace {

int snap_iterations(Method method, double lambda) {
    double k = method == Method::landweber ? 1.0 / lambda : 1.0 / std::sqrt(lambda);
    return std::max(1, static_cast<int>(std::llround(k)));
}

}  // namespace

FilterReport verify_filter(Method method, double alpha, double beta,
                           const std::vector<double>& t_grid,
                           const std::vector<double>& lambda_grid,
                           const std::vector<double>& q_list) {
    if (t_grid.empty() || lambda_grid.empty())
        throw std::invalid_argument("verify_filter: empty grid");
    if (method == Method::landweber) beta = 0.0;
    if (method != Method::tikhonov && (!(alpha > 0.0) || alpha > 1.0))
        throw std::invalid_argument("verify_filter: need alpha in (0,1] so that alpha*t <= 1 on the grid");
    for (double t : t_grid)
        if (!(t > 0.0) || t > 1.0) throw std::invalid_argument("verify_filter: t grid must lie in (0,1]");
    for (double l : lambda_grid)
        if (!(l > 0.0) || l > 1.0) throw std::invalid_argument("verify_filter: lambda grid must lie in (0,1]");

    FilterReport report;
    const std::vector<double> qs = q_list.empty() ? std::vector<double>{0.0} : q_list;

    if (method == Method::tikhonov) {
        for (double lambda : lambda_grid) {
            FilterSpec spec = FilterSpec::tikhonov(lambda);
            double sup_tphi = 0.0, sup_phi = 0.0, sup_res = 0.0;
            std::vector<double> sup_ratio(qs.size(), 0.0);
            for (double t : t_grid) {
                double phi = filter_value(spec, t);
                double res = residual_value(spec, t);
                sup_tphi = std::max(sup_tphi, std::abs(t * phi));
                sup_phi = std::max(sup_phi, std::abs(phi));
                sup_res = std::max(sup_res, std::abs(res));
                for (std::size_t iq = 0; iq < qs.size(); ++iq)
                    sup_ratio[iq] = std::max(sup_ratio[iq],
                                             std::abs(res) * std::pow(t, qs[iq]) / std::pow(lambda, qs[iq]));
            }
            DeclaredConstants dc = spec.declared();
            for (std::size_t iq = 0; iq < qs.size(); ++iq) {
                FilterCheckRow row;
                row.method = method_name(method);
                row.lambda = lambda;
                row.q = qs[iq];
                row.sup_tphi = sup_tphi;
                row.sup_lamphi = lambda * sup_phi;
                row.sup_resid = sup_res;
                row.emp_cq = sup_ratio[iq];
                auto cq = spec.declared_cq(qs[iq]);
                row.gated = cq.has_value();
                row.pass = sup_tphi <= dc.D * kVerifySlack && lambda * sup_phi <= dc.E * kVerifySlack &&
                           sup_res <= dc.c0 * kVerifySlack &&
                           (!cq || sup_ratio[iq] <= *cq * kVerifySlack);
                report.rows.push_back(row);
            }
        }
        return report;
    }

    // Iterative families: snap lambda to admissible iteration counts, then
    // accumulate sups with one recurrence pass per grid point t.
    std::vector<int> ks;
    std::vector<double> lambdas;
    for (double l : lambda_grid) {
        int k = snap_iterations(method, l);
        if (std::find(ks.begin(), ks.end(), k) != ks.end()) continue;
        ks.push_back(k);
        double kk = static_cast<double>(k);
        lambdas.push_back(method == Method::landweber ? 1.0 / kk : 1.0 / (kk * kk));
    }
    int k_max = *std::max_element(ks.begin(), ks.end());

    std::vector<double> sup_tphi(ks.size(), 0.0), sup_phi(ks.size(), 0.0), sup_res(ks.size(), 0.0);
    std::vector<std::vector<double>> sup_ratio(ks.size(), std::vector<double>(qs.size(), 0.0));
    std::vector<double> phis(static_cast<std::size_t>(k_max)), ress(static_cast<std::size_t>(k_max));
    for (double t : t_grid) {
        momentum_phi_walk(method, alpha, beta, k_max, t,
                          [&](int j, double v) { phis[static_cast<std::size_t>(j - 1)] = v; });
        momentum_residual_walk(method, alpha, beta, k_max, t,
                               [&](int j, double v) { ress[static_cast<std::size_t>(j - 1)] = v; });
        for (std::size_t ik = 0; ik < ks.size(); ++ik) {
            double phi = phis[static_cast<std::size_t>(ks[ik] - 1)];
            double res = ress[static_cast<std::size_t>(ks[ik] - 1)];
            sup_tphi[ik] = std::max(sup_tphi[ik], std::abs(t * phi));
            sup_phi[ik] = std::max(sup_phi[ik], std::abs(phi));
            sup_res[ik] = std::max(sup_res[ik], std::abs(res));
            for (std::size_t iq = 0; iq < qs.size(); ++iq)
                sup_ratio[ik][iq] = std::max(
                    sup_ratio[ik][iq], std::abs(res) * std::pow(t, qs[iq]) / std::pow(lambdas[ik], qs[iq]));
        }
    }

    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        FilterSpec spec;
        spec.method = method;
        spec.alpha = alpha;
        spec.beta = beta;
        spec.k = ks[ik];
        spec.lambda = lambdas[ik];
        DeclaredConstants dc = spec.declared();
        for (std::size_t iq = 0; iq < qs.size(); ++iq) {
            FilterCheckRow row;
            row.method = method_name(method);
            row.lambda = lambdas[ik];
            row.q = qs[iq];
            row.sup_tphi = sup_tphi[ik];
            row.sup_lamphi = lambdas[ik] * sup_phi[ik];
            row.sup_resid = sup_res[ik];
            row.emp_cq = sup_ratio[ik][iq];
            auto cq = spec.declared_cq(qs[iq]);
            bool has_base = std::isfinite(dc.D);
            row.gated = has_base || cq.has_value();
            bool base_ok = !has_base || (sup_tphi[ik] <= dc.D * kVerifySlack &&
                                         lambdas[ik] * sup_phi[ik] <= dc.E * kVerifySlack &&
                                         sup_res[ik] <= dc.c0 * kVerifySlack);
            row.pass = base_ok && (!cq || sup_ratio[ik][iq] <= *cq * kVerifySlack);
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace rfs::filters
