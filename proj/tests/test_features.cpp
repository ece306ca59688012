#include "rfs/features.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include <stdexcept>

#include "doctest.h"
#include "rfs/common.hpp"

using namespace rfs::features;

TEST_CASE("gaussian-rff map dimensions and determinism") {
    ScaleConstants sc;
    auto map = sample_feature_map(MapKind::gaussian_rff, 1, 3, sc, 7);
    CHECK(map.p == 1);
    CHECK(map.output_dim() == 3);

    auto a = sample_feature_map(MapKind::gaussian_rff, 4, 16, sc, 42);
    auto b = sample_feature_map(MapKind::gaussian_rff, 4, 16, sc, 42);
    CHECK(a.omega == b.omega);
    CHECK(a.offset == b.offset);
    auto c = sample_feature_map(MapKind::gaussian_rff, 4, 16, sc, 43);
    CHECK(a.omega != c.omega);
}

TEST_CASE("ntk map has p = d + 2 families") {
    ScaleConstants sc;
    auto map = sample_feature_map(MapKind::ntk, 2, 5, sc, 1);
    CHECK(map.p == 4);
    CHECK(map.output_dim() == 20);
}

TEST_CASE("sample_feature_map rejects bad arguments") {
    ScaleConstants sc;
    CHECK_THROWS_AS(sample_feature_map(MapKind::gaussian_rff, 1, 0, sc, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_feature_map(MapKind::gaussian_rff, 0, 4, sc, 1), std::invalid_argument);
    sc.sigma_rff = -1.0;
    CHECK_THROWS_AS(sample_feature_map(MapKind::gaussian_rff, 1, 4, sc, 1), std::invalid_argument);
}

TEST_CASE("constant-frequency rff feature evaluates to sqrt(2)") {
    ScaleConstants sc;
    auto map = sample_feature_map(MapKind::gaussian_rff, 2, 1, sc, 3);
    map.omega.setZero();
    map.offset.setZero();
    Eigen::MatrixXd X(2, 2);
    X << 0.3, -1.2, 5.0, 2.5;
    Eigen::MatrixXd Z = apply_features(map, X);
    CHECK(Z(0, 0) == doctest::Approx(std::numbers::sqrt2));
    CHECK(Z(1, 0) == doctest::Approx(std::numbers::sqrt2));
    // K_M(x, x') = 2 for all pairs in this degenerate map
    CHECK(rf_kernel(map, X.row(0), X.row(1)) == doctest::Approx(2.0));
}

TEST_CASE("ntk features vanish on the zero input for the x-scaled families") {
    ScaleConstants sc;
    sc.activation = Activation::relu;
    auto map = sample_feature_map(MapKind::ntk, 3, 4, sc, 11);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 3);
    Eigen::MatrixXd Z = apply_features(map, X);
    // families 1..d multiply by x^(i); family d+1 is relu(0) = 0
    for (int i = 0; i < 4 * (3 + 1); ++i) CHECK(Z(0, i) == doctest::Approx(0.0));
}

TEST_CASE("rf_kernel equals the inner product of feature rows and is symmetric") {
    ScaleConstants sc;
    auto rng = rfs::make_rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (MapKind kind : {MapKind::gaussian_rff, MapKind::ntk}) {
        auto map = sample_feature_map(kind, 3, 8, sc, 17);
        Eigen::MatrixXd X(2, 3);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
        Eigen::MatrixXd Z = apply_features(map, X);
        double via_rows = Z.row(0).dot(Z.row(1));
        double k01 = rf_kernel(map, X.row(0), X.row(1));
        double k10 = rf_kernel(map, X.row(1), X.row(0));
        CHECK(k01 == doctest::Approx(via_rows).epsilon(1e-12));
        CHECK(k01 == doctest::Approx(k10).epsilon(1e-12));
        CHECK(rf_kernel(map, X.row(0), X.row(0)) >= 0.0);
    }
}

TEST_CASE("feature row norms respect the declared kappa bound") {
    ScaleConstants sc;
    auto rng = rfs::make_rng(23);
    std::normal_distribution<double> g(0.0, 1.0);
    SUBCASE("gaussian-rff") {
        auto map = sample_feature_map(MapKind::gaussian_rff, 2, 32, sc, 9);
        Eigen::MatrixXd X(200, 2);
        for (int i = 0; i < 200; ++i)
            for (int j = 0; j < 2; ++j) X(i, j) = 3.0 * g(rng);
        Eigen::MatrixXd Z = apply_features(map, X);
        for (int i = 0; i < 200; ++i) CHECK(Z.row(i).squaredNorm() <= map.kappa_sq + 1e-12);
    }
    SUBCASE("ntk on the unit ball") {
        for (Activation act : {Activation::relu, Activation::tanh}) {
            sc.activation = act;
            auto map = sample_feature_map(MapKind::ntk, 3, 16, sc, 13);
            Eigen::MatrixXd X(200, 3);
            for (int i = 0; i < 200; ++i) {
                Eigen::VectorXd v(3);
                for (int j = 0; j < 3; ++j) v(j) = g(rng);
                v.normalize();
                X.row(i) = v.transpose();  // boundary of the declared domain
            }
            Eigen::MatrixXd Z = apply_features(map, X);
            for (int i = 0; i < 200; ++i) CHECK(Z.row(i).squaredNorm() <= map.kappa_sq + 1e-12);
        }
    }
}

TEST_CASE("gram matrices are positive semidefinite") {
    ScaleConstants sc;
    auto rng = rfs::make_rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    for (MapKind kind : {MapKind::gaussian_rff, MapKind::ntk}) {
        auto map = sample_feature_map(kind, 2, 12, sc, 71);
        const int n = 64;
        Eigen::MatrixXd X(n, 2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j) X(i, j) = g(rng);
        Eigen::MatrixXd K = rf_gram(map, X);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * K.trace());
    }
}

TEST_CASE("limit kernel closed forms") {
    SUBCASE("gaussian at zero distance is one") {
        KernelOracle o;
        o.kind = OracleKind::gaussian_closed_form;
        o.sigma_rff = 2.0;
        Eigen::VectorXd x(2);
        x << 0.4, -1.0;
        CHECK(limit_kernel(o, x, x) == doctest::Approx(1.0));
        Eigen::VectorXd y(2);
        y << 1.4, -1.0;
        CHECK(limit_kernel(o, x, y) == doctest::Approx(std::exp(-1.0 / 8.0)));
    }
    SUBCASE("relu ntk derivative factor at angle zero is 1/2") {
        // E[relu'(w'x)^2] = P(w'x > 0) = 1/2; checked against the closed form
        // with tau -> the k0 part isolated via gamma
        KernelOracle o;
        o.kind = OracleKind::relu_ntk_closed_form;
        o.tau = 1.0;
        o.gamma = 1.0;
        Eigen::VectorXd x(2);
        x << 1.0, 0.0;
        // K(x,x) = E[relu(w'x)^2] + tau^2(|x|^2 + gamma^2) E[relu'(w'x)^2]
        //        = 1/2 |x|^2 + (1 + 1) * 1/2 = 0.5 + 1.0
        CHECK(limit_kernel(o, x, x) == doctest::Approx(1.5));
    }
    SUBCASE("model-fourier single frequency") {
        KernelOracle o;
        o.kind = OracleKind::model_fourier_closed_form;
        o.model_eigs = Eigen::VectorXd::Ones(1);
        Eigen::VectorXd x(1), y(1);
        x << 0.7;
        y << 0.7;
        CHECK(limit_kernel(o, x, y) == doctest::Approx(2.0));
        y << 0.7 + std::numbers::pi;
        CHECK(limit_kernel(o, x, y) == doctest::Approx(-2.0));
    }
}

TEST_CASE("arc-cosine expectations match a direct monte-carlo oracle") {
    // E[relu'(w'x) relu'(w'y)] = (pi - angle)/(2 pi) and the order-1 analogue,
    // estimated from 2e6 standard-normal draws
    auto rng = rfs::make_rng(404);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd x(2), y(2);
    x << 1.0, 0.0;
    y << std::cos(1.1), std::sin(1.1);
    const int draws = 2000000;
    double acc0 = 0.0, acc1 = 0.0;
    for (int i = 0; i < draws; ++i) {
        Eigen::Vector2d w(g(rng), g(rng));
        double ux = w.dot(x), uy = w.dot(y);
        acc0 += (ux > 0 && uy > 0) ? 1.0 : 0.0;
        acc1 += std::max(ux, 0.0) * std::max(uy, 0.0);
    }
    double k0_mc = acc0 / draws;
    double k1_mc = acc1 / draws;
    double k0 = (std::numbers::pi - 1.1) / (2.0 * std::numbers::pi);
    double k1 = (std::sin(1.1) + (std::numbers::pi - 1.1) * std::cos(1.1)) / (2.0 * std::numbers::pi);
    CHECK(k0_mc == doctest::Approx(k0).epsilon(0.01));
    CHECK(k1_mc == doctest::Approx(k1).epsilon(0.01));
    // at angle zero the derivative factor is exactly 1/2
    CHECK((std::numbers::pi - 0.0) / (2.0 * std::numbers::pi) == doctest::Approx(0.5));
}

TEST_CASE("ntk monte-carlo kernel converges to the arc-cosine closed form") {
    // single fixed pair, large M; the 5-stderr bound is the acceptance gate
    ScaleConstants sc;
    sc.activation = Activation::relu;
    auto map = sample_feature_map(MapKind::ntk, 3, 20000, sc, 99);
    auto oracle = KernelOracle::for_map(map);
    Eigen::MatrixXd X(2, 3);
    X << 1.0, 0.0, 0.0, 0.6, 0.8, 0.0;
    Eigen::MatrixXd Z = apply_features(map, X);
    double km = Z.row(0).dot(Z.row(1));
    double ki = limit_kernel(oracle, X.row(0), X.row(1));
    CHECK(km == doctest::Approx(ki).epsilon(0.05));
}

TEST_CASE("maps averaged over 200 seeds are unbiased for their limit kernels") {
    // 20 fixed pairs, 3 standard errors of the map average, both closed-form kinds
    const int maps = 200, pairs = 20, d = 2;
    auto rng = rfs::make_rng(246);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(pairs, d), B(pairs, d);
    for (int i = 0; i < pairs; ++i)
        for (int j = 0; j < d; ++j) {
            A(i, j) = g(rng);
            B(i, j) = g(rng);
        }
    for (MapKind kind : {MapKind::gaussian_rff, MapKind::ntk}) {
        ScaleConstants sc;
        if (kind == MapKind::ntk) sc.activation = Activation::relu;
        Eigen::MatrixXd km(maps, pairs);
        KernelOracle oracle;
        for (int s = 0; s < maps; ++s) {
            auto map = sample_feature_map(kind, d, 16, sc,
                                          rfs::seed_hash({static_cast<std::uint64_t>(s),
                                                          static_cast<std::uint64_t>(kind), 1234}));
            if (s == 0) oracle = KernelOracle::for_map(map);
            for (int i = 0; i < pairs; ++i)
                km(s, i) = rf_kernel(map, A.row(i), B.row(i));
        }
        for (int i = 0; i < pairs; ++i) {
            double mean = km.col(i).mean();
            double var = (km.col(i).array() - mean).square().sum() / (maps - 1);
            double se = std::sqrt(var / maps);
            double kinf = limit_kernel(oracle, A.row(i).transpose(), B.row(i).transpose());
            INFO("kind=", static_cast<int>(kind), " pair=", i);
            CHECK(std::abs(mean - kinf) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("oracle for a tanh ntk map is rejected") {
    ScaleConstants sc;
    sc.activation = Activation::tanh;
    auto map = sample_feature_map(MapKind::ntk, 2, 4, sc, 5);
    CHECK_THROWS_AS(KernelOracle::for_map(map), std::invalid_argument);
}

TEST_CASE("apply_features rejects dimension mismatches") {
    ScaleConstants sc;
    auto map = sample_feature_map(MapKind::gaussian_rff, 3, 4, sc, 2);
    Eigen::MatrixXd X(2, 2);
    X.setZero();
    CHECK_THROWS_AS(apply_features(map, X), std::invalid_argument);
}
