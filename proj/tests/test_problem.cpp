#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "sdeweak/problem.hpp"

using namespace sdeweak;

TEST_CASE("quintic model coefficients at spot values") {
    SdeProblem p = make_quintic_model();
    CHECK(p.dim_state == 1);
    CHECK(p.dim_noise == 1);
    CHECK(p.growth_r == 2);
    CHECK(p.growth_rho == 2);
    CHECK(p.horizon == doctest::Approx(1.0));
    CHECK(p.initial_state[0] == doctest::Approx(2.0));

    Vector x(1);
    x[0] = 2.0;
    // drift 1 - x^5 + x^3 = 1 - 32 + 8 = -23
    CHECK(p.drift(x)[0] == doctest::Approx(-23.0).epsilon(1e-15));
    // diffusion x^2/10 + 2 = 2.4
    CHECK(p.diffusion(x)(0, 0) == doctest::Approx(2.4).epsilon(1e-15));

    x[0] = -1.0;
    CHECK(p.drift(x)[0] == doctest::Approx(1.0).epsilon(1e-15));   // 1 + 1 - 1
    CHECK(p.diffusion(x)(0, 0) == doctest::Approx(2.1).epsilon(1e-15));

    x[0] = 0.0;
    CHECK(p.drift(x)[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.diffusion(x)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("quintic drift jacobian is analytic and matches finite differences") {
    SdeProblem p = make_quintic_model();
    REQUIRE(bool(p.drift_jacobian_into));
    Vector x(1);
    Matrix J(1, 1);
    for (double v : {-3.0, -1.0, -0.25, 0.0, 0.5, 2.0, 4.0}) {
        x[0] = v;
        p.drift_jacobian_into(x, J);
        // d/dx (1 - x^5 + x^3) = -5x^4 + 3x^2
        CHECK(J(0, 0) == doctest::Approx(-5.0 * std::pow(v, 4) + 3.0 * v * v).epsilon(1e-12));
    }
}

TEST_CASE("quintic polynomial growth bound") {
    // |f(x)| <= C (1 + |x|^(2r+1)) with r=2 -> exponent 5; C=3 suffices
    SdeProblem p = make_quintic_model();
    Vector x(1);
    for (int i = 0; i <= 400; ++i) {
        const double v = -20.0 + 0.1 * i;
        x[0] = v;
        const double bound = 3.0 * (1.0 + std::pow(std::abs(v), 5));
        CHECK(std::abs(p.drift(x)[0]) <= bound);
    }
}

TEST_CASE("quintic one-sided Lipschitz sampling") {
    // (x-y)(f(x)-f(y)) <= L |x-y|^2 must hold with a moderate L; the cubic
    // term x^3 contributes at most ~ (3/4)*max|x|... sampled bound L=20 over
    // |x|,|y| <= 5.
    SdeProblem p = make_quintic_model();
    std::mt19937 gen(12345);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    Vector x(1), y(1);
    for (int i = 0; i < 1000; ++i) {
        x[0] = dist(gen);
        y[0] = dist(gen);
        const double lhs = (x[0] - y[0]) * (p.drift(x)[0] - p.drift(y)[0]);
        CHECK(lhs <= 20.0 * (x[0] - y[0]) * (x[0] - y[0]) + 1e-9);
    }
}

TEST_CASE("quintic custom initial value") {
    SdeProblem p = make_quintic_model(8.0);
    CHECK(p.initial_state[0] == doctest::Approx(8.0));
}

TEST_CASE("fhn model coefficients at spot values") {
    SdeProblem p = make_fhn_model();
    CHECK(p.dim_state == 2);
    CHECK(p.dim_noise == 2);
    CHECK(p.growth_r == 1);
    CHECK(p.growth_rho == 1);
    CHECK(p.initial_state[0] == doctest::Approx(0.0));
    CHECK(p.initial_state[1] == doctest::Approx(0.0));

    Vector x(2);
    x << 1.0, 2.0;
    Vector f = p.drift(x);
    // f1 = x1 - x1^3 - x2 = 1 - 1 - 2 = -2 ; f2 = x1 - x2 + 1 = 0
    CHECK(f[0] == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(f[1] == doctest::Approx(0.0).epsilon(1e-15));

    Matrix g = p.diffusion(x);
    REQUIRE(g.rows() == 2);
    REQUIRE(g.cols() == 2);
    CHECK(g(0, 0) == doctest::Approx(2.0));  // x1 + 1
    CHECK(g(1, 1) == doctest::Approx(3.0));  // x2 + 1
    CHECK(g(0, 1) == doctest::Approx(0.0));
    CHECK(g(1, 0) == doctest::Approx(0.0));

    x << -0.5, 0.25;
    f = p.drift(x);
    CHECK(f[0] == doctest::Approx(-0.5 + 0.125 - 0.25).epsilon(1e-15));
    CHECK(f[1] == doctest::Approx(-0.5 - 0.25 + 1.0).epsilon(1e-15));
}

TEST_CASE("fhn analytic jacobian matches finite differences on a grid") {
    SdeProblem p = make_fhn_model();
    REQUIRE(bool(p.drift_jacobian_into));
    Matrix J(2, 2), J_fd(2, 2);
    Vector x(2), xp(2), xm(2);
    const double eps = 1e-5;
    std::mt19937 gen(777);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        x[0] = dist(gen);
        x[1] = dist(gen);
        p.drift_jacobian_into(x, J);
        for (int j = 0; j < 2; ++j) {
            xp = x;
            xm = x;
            xp[j] += eps;
            xm[j] -= eps;
            J_fd.col(j) = (p.drift(xp) - p.drift(xm)) / (2.0 * eps);
        }
        CHECK((J - J_fd).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("generic finite-difference jacobian helper agrees with analytic one") {
    SdeProblem p = make_fhn_model();
    SdeProblem p_no_jac = p;
    p_no_jac.drift_jacobian_into = nullptr;
    Matrix J(2, 2), J_fd(2, 2);
    Vector x(2);
    x << 1.5, -0.75;
    drift_jacobian(p, x, J);
    drift_jacobian(p_no_jac, x, J_fd);
    CHECK((J - J_fd).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("ou model exact moments") {
    // dX = -a X dt + s dW: E X_T = x0 e^{-aT}, Var X_T = s^2 (1-e^{-2aT})/(2a)
    SdeProblem p = make_ou_model(2.0, 1.0, 1.0, 1.0);
    REQUIRE(p.has_exact_moments);
    CHECK(p.exact_mean == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    const double var = (1.0 - std::exp(-4.0)) / 4.0;
    CHECK(p.exact_second_moment ==
          doctest::Approx(var + std::exp(-4.0)).epsilon(1e-14));

    SdeProblem q = make_ou_model(0.2, 0.4, 1.0, 1.0);
    CHECK(q.exact_mean == doctest::Approx(std::exp(-0.2)).epsilon(1e-14));
    const double var_q = 0.16 * (1.0 - std::exp(-0.4)) / 0.4;
    CHECK(q.exact_second_moment ==
          doctest::Approx(var_q + std::exp(-0.4)).epsilon(1e-14));

    Vector x(1);
    x[0] = 3.0;
    CHECK(p.drift(x)[0] == doctest::Approx(-6.0));
    CHECK(p.diffusion(x)(0, 0) == doctest::Approx(1.0));
    Matrix J(1, 1);
    p.drift_jacobian_into(x, J);
    CHECK(J(0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("model catalog") {
    auto ids = model_ids();
    REQUIRE(ids.size() == 3);
    CHECK(std::find(ids.begin(), ids.end(), "quintic") != ids.end());
    CHECK(std::find(ids.begin(), ids.end(), "fhn") != ids.end());
    CHECK(std::find(ids.begin(), ids.end(), "ou") != ids.end());

    ModelOptions opts;
    SdeProblem p = make_model("quintic", opts);
    CHECK(p.dim_state == 1);

    opts.x0 = std::vector<double>{8.0};
    SdeProblem p8 = make_model("quintic", opts);
    CHECK(p8.initial_state[0] == doctest::Approx(8.0));

    ModelOptions bad;
    bad.x0 = std::vector<double>{1.0, 2.0, 3.0};  // wrong dimension for fhn
    CHECK_THROWS_AS(make_model("fhn", bad), std::invalid_argument);
    CHECK_THROWS_AS(make_model("nope", ModelOptions{}), std::invalid_argument);
}

TEST_CASE("test function catalog") {
    auto ids = test_function_ids();
    REQUIRE(ids.size() == 4);

    Vector x(2);
    x << 1.5, -4.0;  // functions act on the first state coordinate
    CHECK(make_test_function("identity").eval(x) == doctest::Approx(1.5));
    CHECK(make_test_function("square").eval(x) == doctest::Approx(2.25));
    CHECK(make_test_function("cos").eval(x) == doctest::Approx(std::cos(1.5)));
    CHECK(make_test_function("exp_neg_sq").eval(x) ==
          doctest::Approx(std::exp(-2.25)));
    CHECK_THROWS_AS(make_test_function("cube"), std::invalid_argument);

    CHECK(make_test_function("identity").label == "identity");
    CHECK(make_test_function("exp_neg_sq").label == "exp_neg_sq");
}
