#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ntk/errors.hpp"
#include "ntk/kernel.hpp"

using namespace ntk;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("pair expectation: independence and identity") {
    for (ActKind k : {ActKind::relu, ActKind::gelu, ActKind::elu, ActKind::softplus, ActKind::tanh}) {
        auto act = make_activation(k);
        CAPTURE(act.name);
        const double a = 0.8, b = 1.2;
        const double c0a = hermite_coeffs(act, a, 4, 200).c[0];
        const double c0b = hermite_coeffs(act, b, 4, 200).c[0];
        for (PairMethod m : {PairMethod::quadrature, PairMethod::automatic}) {
            const double v = gaussian_pair_expectation(act, a, b, 0.0, m).value;
            CHECK(std::abs(v - c0a * c0b) <= 1e-9);
        }
    }
    auto id = make_activation(ActKind::identity);
    for (PairMethod m : {PairMethod::mehler, PairMethod::quadrature, PairMethod::closed_form_relu})
        CHECK(gaussian_pair_expectation(id, 1.1, 0.9, 0.37, m).value == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("pair expectation: relu method triangle") {
    auto relu = make_activation(ActKind::relu);
    const double cf = gaussian_pair_expectation(relu, 1, 1, 0.5, PairMethod::closed_form_relu).value;
    const double q = gaussian_pair_expectation(relu, 1, 1, 0.5, PairMethod::quadrature, false, 80).value;
    const double me = gaussian_pair_expectation(relu, 1, 1, 0.5, PairMethod::mehler).value;
    CHECK(std::abs(cf - q) <= 1e-9);
    CHECK(std::abs(cf - me) <= 1e-4);
    // Independent value: (sqrt(3)/2 + (1/2)(2 pi / 3)) / (2 pi)
    CHECK(cf == doctest::Approx((std::sqrt(3.0) / 2 + kPi / 3) / (2 * kPi)).epsilon(1e-14));
    // derivative kernel: P(u > 0, v > 0) = 1/4 + asin(rho)/(2 pi)
    const double dcf = gaussian_pair_expectation(relu, 1, 1, 0.5, PairMethod::closed_form_relu, true).value;
    CHECK(dcf == doctest::Approx(0.25 + std::asin(0.5) / (2 * kPi)).epsilon(1e-14));
    const double dq = gaussian_pair_expectation(relu, 1, 1, 0.5, PairMethod::quadrature, true).value;
    CHECK(std::abs(dcf - dq) <= 1e-9);
}

TEST_CASE("pair expectation: method agreement grid") {
    for (ActKind k : {ActKind::gelu, ActKind::erf, ActKind::tanh, ActKind::softplus}) {
        auto act = make_activation(k);
        CAPTURE(act.name);
        for (double a : {0.7, 1.0, 1.3})
            for (double b : {0.7, 1.0, 1.3})
                for (double rho : {0.0, 0.3, -0.3, 0.7, -0.7, 0.95, -0.95}) {
                    const double cov = rho * a * b;
                    const double m = gaussian_pair_expectation(act, a, b, cov, PairMethod::mehler).value;
                    const double q = gaussian_pair_expectation(act, a, b, cov, PairMethod::quadrature).value;
                    CHECK(std::abs(m - q) <= 1e-6);
                }
    }
    for (auto kind : {ActKind::relu, ActKind::relu_sqrt2}) {
        auto act = make_activation(kind);
        for (double a : {0.7, 1.0, 1.3})
            for (double b : {0.7, 1.3})
                for (double rho : {0.0, 0.3, -0.7, 0.95, -0.95, 1.0, -1.0}) {
                    const double cov = rho * a * b;
                    for (bool der : {false, true}) {
                        const double cf =
                            gaussian_pair_expectation(act, a, b, cov, PairMethod::closed_form_relu, der).value;
                        const double q = gaussian_pair_expectation(act, a, b, cov, PairMethod::quadrature, der).value;
                        CHECK(std::abs(cf - q) <= 1e-9);
                        if (std::abs(rho) <= 0.95) {
                            const double m = gaussian_pair_expectation(act, a, b, cov, PairMethod::mehler, der).value;
                            CHECK(std::abs(m - q) <= 1e-3 * (der ? 2.0 : 1.0));
                        }
                    }
                }
    }
}

TEST_CASE("pair expectation: domain errors") {
    auto g = make_activation(ActKind::gelu);
    CHECK_THROWS_AS(gaussian_pair_expectation(g, 1, 1, 0.995, PairMethod::mehler), MethodDomainError);
    CHECK_NOTHROW(gaussian_pair_expectation(g, 1, 1, 0.995, PairMethod::automatic));
    CHECK_THROWS_AS(gaussian_pair_expectation(g, 1, 1, 1.1, PairMethod::quadrature), InvalidArgument);
    CHECK_THROWS_AS(gaussian_pair_expectation(g, 1, 1, 0.5, PairMethod::closed_form_relu), InvalidArgument);
    // within roundoff of the boundary: clamped
    auto m = gaussian_pair_expectation(g, 1, 1, 1.0 + 1e-13, PairMethod::quadrature);
    CHECK(m.rho == 1.0);
}

TEST_CASE("covariance recursion") {
    auto r2 = make_activation(ActKind::relu_sqrt2);
    auto kv = sigma_recursion({r2}, 2, 4, 1.0);
    for (double s : kv.sigma) CHECK(std::abs(s - 1.0) <= 1e-9);
    NtkKernel k2({r2}, 4, 2, PairMethod::quadrature);
    for (double v : k2.variances()) CHECK(std::abs(v - 1.0) <= 1e-9);

    NtkKernel kr({make_activation(ActKind::relu)}, 4, 2);
    for (int l = 1; l <= 4; ++l) CHECK(kr.variances()[l] == doctest::Approx(kr.variances()[l - 1] / 2));

    auto id = make_activation(ActKind::identity);
    for (double t : {-0.8, 0.0, 0.4}) {
        auto v = sigma_recursion({id}, 3, 3, t);
        for (double s : v.sigma) CHECK(s == doctest::Approx(t));
    }

    // per-layer activations: relu then gelu
    NtkKernel mixed({make_activation(ActKind::relu), make_activation(ActKind::gelu)}, 2, 2);
    CHECK(mixed.variances()[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(NtkKernel({id, id}, 3, 2), InvalidArgument);

    CHECK_NOTHROW(k2.check_variance_bounds(0.5, 2.0));
    CHECK_THROWS_AS(kr.check_variance_bounds(0.5, 2.0), InvalidArgument);
}

TEST_CASE("ntk limit examples") {
    auto g = ntk_limit({make_activation(ActKind::relu_sqrt2)}, 2, 2);
    CHECK(std::abs(g(1.0) - 1.0) <= 1e-12);
    auto gi = ntk_limit({make_activation(ActKind::identity)}, 2, 3);
    for (double t : {-1.0, -0.3, 0.5, 1.0}) CHECK(gi(t) == doctest::Approx(t));
    CHECK_THROWS_AS(ntk_limit({make_activation(ActKind::relu)}, 2, 1), InvalidArgument);
    // ReLU L = 2 from nested arc-cosine formulas.
    auto gr = ntk_limit({make_activation(ActKind::relu)}, 2, 2);
    for (double t : {-0.9, -0.2, 0.3, 0.8}) {
        const double s1 = (std::sqrt(1 - t * t) + t * (kPi - std::acos(t))) / (2 * kPi);
        const double rho = s1 / 0.5;
        const double sd = (kPi - std::acos(rho)) / (2 * kPi);
        CHECK(gr(t) == doctest::Approx(sd * s1).epsilon(1e-13));
    }
    // The sigma evaluator reproduces the variance at t = 1.
    NtkKernel k({make_activation(ActKind::gelu)}, 3, 2);
    for (int l = 0; l <= 3; ++l) CHECK(k.sigma(l)(1.0) == k.variances()[l]);
}

TEST_CASE("sphere constants and Gegenbauer") {
    CHECK(sphere_area(2) == doctest::Approx(2 * kPi));
    CHECK(sphere_area(3) == doctest::Approx(4 * kPi));
    for (int l = 0; l < 6; ++l) {
        CHECK(harmonic_multiplicity(2, l) == (l == 0 ? 1 : 2));
        CHECK(harmonic_multiplicity(3, l) == 2 * l + 1);
        CHECK(harmonic_multiplicity(4, l) == (l + 1) * (l + 1));
    }
    std::vector<double> p;
    gegenbauer_all(3, 3, 0.3, p);
    CHECK(p[2] == doctest::Approx(0.5 * (3 * 0.09 - 1)));
    CHECK(p[3] == doctest::Approx(0.5 * (5 * 0.027 - 3 * 0.3)));
    gegenbauer_all(2, 5, std::cos(0.7), p);
    CHECK(p[5] == doctest::Approx(std::cos(3.5)));
}

TEST_CASE("zonal eigenvalues: examples") {
    ZonalKernel one{2, [](double) { return 1.0; }, {}, ZonalKind::custom, 0};
    auto s1 = zonal_eigenvalues(one, 8, 32);
    CHECK(s1.values[0] == doctest::Approx(1.0));
    for (int l = 1; l <= 8; ++l) CHECK(std::abs(s1.values[l]) <= 1e-14);

    ZonalKernel lin{2, [](double t) { return t; }, {}, ZonalKind::custom, 0};
    auto s2 = zonal_eigenvalues(lin, 8, 32);
    CHECK(s2.values[1] == doctest::Approx(0.5));
    CHECK(s2.multiplicity[1] == 2);
    for (int l : {0, 2, 3, 4}) CHECK(std::abs(s2.values[l]) <= 1e-14);

    lin.d = 3;
    auto s3 = zonal_eigenvalues(lin, 4, 16);
    CHECK(s3.values[1] == doctest::Approx(1.0 / 3));
    CHECK(s3.multiplicity[1] == 3);
    // trace identity: sum of multiplicity * lambda = k(1)
    ZonalKernel ex{3, [](double t) { return std::exp(t); }, {}, ZonalKind::custom, 0};
    auto se = zonal_eigenvalues(ex, 20, 80);
    double tr = 0;
    for (int l = 0; l <= 20; ++l) tr += se.multiplicity[l] * se.values[l];
    CHECK(tr == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

    ZonalKernel sharp{2, [](double t) { return std::exp(40 * t); }, {}, ZonalKind::custom, 0};
    CHECK_THROWS_AS(zonal_eigenvalues(sharp, 2, 8), AliasingError);
    CHECK_THROWS_AS(zonal_eigenvalues(one, 8, 16), InvalidArgument);
}

TEST_CASE("zonal eigenvalues: relu NTK vs discretized operator") {
    auto g = ntk_limit({make_activation(ActKind::relu)}, 2, 2);
    auto fh = zonal_eigenvalues(g, 40, 160);
    const int n = 256;
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = g(std::cos(2 * kPi * (i - j) / n)) / n;
    auto se = sym_eig(G, false);
    std::vector<double> fh_sorted;
    for (int l = 0; l <= 40; ++l)
        for (int r = 0; r < fh.multiplicity[l]; ++r) fh_sorted.push_back(fh.values[l]);
    std::sort(fh_sorted.begin(), fh_sorted.end(), std::greater<>());
    for (int i = 0; i < 10; ++i) CHECK(std::abs(se.values[i] - fh_sorted[i]) <= 0.01 * fh_sorted[i]);
}

TEST_CASE("zonal eigenvalues are nonnegative for forward and NTK kernels") {
    for (ActKind k : {ActKind::relu, ActKind::relu_sqrt2, ActKind::gelu, ActKind::erf, ActKind::tanh}) {
        NtkKernel nk({make_activation(k)}, 3, 2);
        CAPTURE(to_string(k));
        for (auto z : {nk.sigma(1), nk.sigma(2), nk.ntk()}) {
            auto s = zonal_eigenvalues(z, 24, 96);
            for (double v : s.values) CHECK(v >= -1e-10);
        }
    }
}
