#include "rfs/filters.hpp"

#include <cmath>
#include <vector>

#include <stdexcept>

#include "doctest.h"

using namespace rfs::filters;

TEST_CASE("tikhonov filter is 1/(t+lambda)") {
    auto spec = FilterSpec::tikhonov(0.5);
    CHECK(filter_value(spec, 0.5) == doctest::Approx(1.0));
    CHECK(residual_value(spec, 0.5) == doctest::Approx(0.5));
    CHECK(filter_value(spec, 0.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(filter_value(spec, -0.1), std::invalid_argument);
}

TEST_CASE("landweber filter matches the geometric sum") {
    // alpha=1, k=2, t=0.5: alpha * (1 + (1 - 0.5)) = 1.5
    auto spec = FilterSpec::landweber(2, 1.0);
    CHECK(filter_value(spec, 0.5) == doctest::Approx(1.5));
    // residual (1-alpha t)^k: alpha=1, k=3, t=0.5 -> 0.125
    CHECK(residual_value(FilterSpec::landweber(3, 1.0), 0.5) == doctest::Approx(0.125));
    // phi_k(0) = k alpha
    CHECK(filter_value(FilterSpec::landweber(7, 0.25), 0.0) == doctest::Approx(7.0 * 0.25));
}

TEST_CASE("landweber filter equals the closed form (1-(1-at)^k)/t") {
    for (double alpha : {0.25, 0.5, 1.0}) {
        for (int k : {1, 3, 10, 100, 1000}) {
            auto spec = FilterSpec::landweber(k, alpha);
            for (double t : {1e-4, 0.05, 0.3, 0.999, 1.0}) {
                double closed = (1.0 - std::pow(1.0 - alpha * t, k)) / t;
                CHECK(filter_value(spec, t) == doctest::Approx(closed).epsilon(1e-9));
            }
            // near t = 0 the naive form cancels badly; long-double oracle there
            for (double t : {1e-10, 1e-8}) {
                long double at = static_cast<long double>(alpha) * static_cast<long double>(t);
                long double closed = (1.0L - std::pow(1.0L - at, static_cast<long double>(k))) /
                                     static_cast<long double>(t);
                CHECK(filter_value(spec, t) ==
                      doctest::Approx(static_cast<double>(closed)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("residual + t*filter = 1 on a grid for every method") {
    std::vector<FilterSpec> specs = {
        FilterSpec::tikhonov(0.03),
        FilterSpec::landweber(17, 0.7),
        FilterSpec::heavy_ball(12, 0.9, 0.3),
        FilterSpec::nesterov(9, 0.8),
    };
    for (const auto& spec : specs) {
        for (int i = 1; i <= 100; ++i) {
            double t = static_cast<double>(i) / 100.0;
            double lhs = residual_value(spec, t) + t * filter_value(spec, t);
            CHECK(std::abs(lhs - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("heavy-ball with beta = 0 collapses to landweber") {
    for (double alpha : {0.5, 1.0}) {
        for (int k : {1, 2, 5, 40}) {
            auto hb = FilterSpec::heavy_ball(k, alpha, 0.0);
            auto lw = FilterSpec::landweber(k, alpha);
            for (int i = 1; i <= 100; ++i) {
                double t = static_cast<double>(i) / 100.0;
                CHECK(filter_value(hb, t) == doctest::Approx(filter_value(lw, t)).epsilon(1e-12));
                CHECK(residual_value(hb, t) ==
                      doctest::Approx(residual_value(lw, t)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("heavy-ball residual recurrence unrolled by hand") {
    // r0=1, r1=1-at, r2=(1+b-at)r1 - b r0; a=1, b=0.25, t=0.5:
    // r2 = (1.25-0.5)*0.5 - 0.25 = 0.125
    auto spec = FilterSpec::heavy_ball(2, 1.0, 0.25);
    CHECK(residual_value(spec, 0.5) == doctest::Approx(0.125));
}

TEST_CASE("residual tends to one as t goes to zero") {
    std::vector<FilterSpec> specs = {
        FilterSpec::tikhonov(0.2),
        FilterSpec::landweber(25, 1.0),
        FilterSpec::heavy_ball(25, 1.0, 0.25),
        FilterSpec::nesterov(25, 1.0),
    };
    for (const auto& spec : specs) {
        CHECK(residual_value(spec, 0.0) == doctest::Approx(1.0));
        CHECK(residual_value(spec, 1e-12) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("tikhonov and landweber residuals are nonincreasing in t") {
    auto grid = log_grid(1e-3, 1.0, 200);
    auto check_monotone = [&](const FilterSpec& spec) {
        double prev = residual_value(spec, grid[0]);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double cur = residual_value(spec, grid[i]);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    };
    check_monotone(FilterSpec::tikhonov(0.05));
    check_monotone(FilterSpec::landweber(30, 1.0));
    check_monotone(FilterSpec::landweber(7, 0.5));
}

TEST_CASE("verify_filter confirms the tikhonov constants") {
    auto t_grid = log_grid(1e-3, 1.0, 300);
    auto lam_grid = log_grid(1e-3, 1.0, 300);
    auto report = verify_filter(Method::tikhonov, 1.0, 0.0, t_grid, lam_grid, {0.0, 0.5, 1.0});
    CHECK(report.all_gated_pass());
    CHECK(report.family_sup_tphi() <= 1.0 + 1e-12);
    CHECK(report.family_cq(1.0) <= 1.0 + 1e-12);
}

TEST_CASE("verify_filter landweber empirical c_q stays under (q/alpha)^q") {
    auto t_grid = log_grid(1e-3, 1.0, 300);
    auto lam_grid = log_grid(1e-3, 1.0, 300);
    auto report = verify_filter(Method::landweber, 0.5, 0.0, t_grid, lam_grid, {1.0});
    CHECK(report.all_gated_pass());
    CHECK(report.family_cq(1.0) <= 2.0 * 1.01);  // (1/0.5)^1 with 1% slack
}

TEST_CASE("tikhonov saturates at q=2 while landweber does not") {
    auto t_grid = log_grid(1e-3, 1.0, 300);
    auto lam_grid = log_grid(1e-3, 1.0, 300);
    auto tik = verify_filter(Method::tikhonov, 1.0, 0.0, t_grid, lam_grid, {2.0});
    CHECK(tik.family_cq(2.0) > 10.0);
    auto lw = verify_filter(Method::landweber, 1.0, 0.0, t_grid, lam_grid, {2.0});
    CHECK(lw.family_cq(2.0) <= 4.0 * 1.01);  // (2/1)^2 with slack
    CHECK(lw.all_gated_pass());
}

TEST_CASE("heavy-ball sup |t phi| stays below 2 for k up to 64") {
    auto t_grid = log_grid(1e-3, 1.0, 400);
    std::vector<int> ks;
    for (int k = 1; k <= 64; ++k) ks.push_back(k);
    auto report = verify_filter(Method::heavy_ball, 1.0, 0.25, t_grid,
                                lambda_grid_from_iterations(Method::heavy_ball, ks), {0.0});
    CHECK(report.family_sup_tphi() <= 2.0 * 1.01);
    CHECK(report.all_gated_pass());
}

TEST_CASE("filter report serializes to csv") {
    auto report = verify_filter(Method::tikhonov, 1.0, 0.0, log_grid(0.01, 1.0, 20),
                                log_grid(0.01, 1.0, 5), {0.0, 1.0});
    auto csv = report.to_csv();
    CHECK(csv.find("method,lambda,q,sup_tphi,sup_lamphi,sup_resid,emp_cq,pass") == 0);
    CHECK(csv.find("tikhonov") != std::string::npos);
}

TEST_CASE("verify_filter rejects empty and out-of-range grids") {
    CHECK_THROWS_AS(verify_filter(Method::tikhonov, 1.0, 0.0, {}, {0.1}, {0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(verify_filter(Method::tikhonov, 1.0, 0.0, {0.5}, {1.5}, {0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(verify_filter(Method::landweber, 1.5, 0.0, {0.5}, {0.5}, {0.0}),
                    std::invalid_argument);
}

TEST_CASE("filter_path matches per-k filter values") {
    auto path = filter_path(Method::heavy_ball, 0.8, 0.3, 20, 0.4);
    for (int k = 1; k <= 20; ++k) {
        auto spec = FilterSpec::heavy_ball(k, 0.8, 0.3);
        CHECK(path[static_cast<std::size_t>(k - 1)] ==
              doctest::Approx(filter_value(spec, 0.4)).epsilon(1e-13));
    }
}
