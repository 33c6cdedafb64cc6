#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ntk/activations.hpp"
#include "ntk/errors.hpp"
#include "ntk/numerics/hermite.hpp"
#include "ntk/numerics/quadrature.hpp"

using namespace ntk;

TEST_CASE("closed-form values") {
    CHECK(make_activation(ActKind::relu).value(-1.0) == 0.0);
    CHECK(make_activation(ActKind::softplus).value(0.0) == doctest::Approx(std::numbers::ln2));
    auto g = make_activation(ActKind::gelu);
    CHECK(g.value(0.0) == 0.0);
    CHECK(g.deriv(0.0) == doctest::Approx(0.5));
    CHECK(make_activation(ActKind::relu_sqrt2).value(2.0) == doctest::Approx(2 * std::numbers::sqrt2));
    CHECK(make_activation(ActKind::elu).value(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
    CHECK(make_activation(ActKind::relu).deriv(0.0) == 1.0);
    CHECK(make_activation(ActKind::elu).deriv(0.0) == 1.0);
    CHECK(activation_by_name("tanh").kind == ActKind::tanh);
    CHECK_THROWS_AS(activation_by_name("swish"), InvalidArgument);
}

TEST_CASE("growth and derivative bounds on a dense grid") {
    for (ActKind k : all_activation_kinds()) {
        auto a = make_activation(k);
        CAPTURE(a.name);
        for (int i = 0; i < 10000; ++i) {
            const double x = -50.0 + 100.0 * i / 9999.0;
            CHECK(std::abs(a.value(x)) <= a.growth_constant * std::abs(x) + a.growth_offset + 1e-12);
            if (k != ActKind::identity) CHECK(std::abs(a.deriv(x)) <= a.derivative_bound + 1e-12);
        }
    }
}

TEST_CASE("derivatives match central differences") {
    for (ActKind k : all_activation_kinds()) {
        auto a = make_activation(k);
        if (a.smoothness_class == 0) continue;
        CAPTURE(a.name);
        const double h = 1e-5;
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double x = -5.0 + 10.0 * i / 999.0;
            const double fd = (a.value(x + h) - a.value(x - h)) / (2 * h);
            worst = std::max(worst, std::abs(fd - a.deriv(x)));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("hermite coefficients: examples") {
    auto id = hermite_coeffs(make_activation(ActKind::identity), 1.0, 8, 40);
    for (int k = 0; k <= 8; ++k) CHECK(std::abs(id.c[k] - (k == 1 ? 1.0 : 0.0)) <= 1e-13);

    auto relu = hermite_coeffs(make_activation(ActKind::relu), 1.0, 64, 128);
    CHECK(std::abs(relu.c[0] - 1.0 / std::sqrt(2 * std::numbers::pi)) <= 1e-12);
    CHECK(std::abs(relu.c[1] - 0.5) <= 1e-12);
    for (int k = 3; k <= 64; k += 2) CHECK(std::abs(relu.c[k]) <= 1e-10);
    CHECK(relu.norm_sq == doctest::Approx(0.5).epsilon(1e-12));

    auto g1 = hermite_coeffs(make_activation(ActKind::gelu), 1.0, 64, 128);
    auto g2 = hermite_coeffs(make_activation(ActKind::gelu), 1.0, 64, 256);
    for (int k = 0; k <= 64; ++k) CHECK(std::abs(g1.c[k] - g2.c[k]) <= 1e-8);

    CHECK_THROWS_AS(hermite_coeffs(make_activation(ActKind::gelu), 1.0, 64, 100), InvalidArgument);
    CHECK_THROWS_AS(hermite_coeffs(make_activation(ActKind::gelu), 0.0, 4, 10), InvalidArgument);
    CHECK_THROWS_AS(hermite_coeffs(make_activation(ActKind::gelu), 11.0, 4, 10), InvalidArgument);
    CHECK_THROWS_AS(hermite_coeffs(make_activation(ActKind::gelu), 1.0, 129, 300), InvalidArgument);
}

TEST_CASE("hermite coefficients: Parseval for smooth kinds") {
    for (ActKind k : {ActKind::gelu, ActKind::erf, ActKind::tanh, ActKind::softplus}) {
        auto a = make_activation(k);
        CAPTURE(a.name);
        for (double s : {0.7, 1.0, 1.3}) {
            auto hc = hermite_coeffs(a, s, 64, 160);
            // Direct second moment by an independent dense Legendre rule.
            auto gl = composite_legendre_rule({-40.0, 40.0}, 400, 20);
            const double direct = gl.integrate([&](double x) {
                return a.value(s * x) * a.value(s * x) * std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
            });
            double sum = 0;
            for (double c : hc.c) sum += c * c;
            CHECK(sum <= direct + 1e-12);
            CHECK(std::abs(sum - direct) <= 1e-6);
            CHECK(hc.tail_bound <= 1e-6);
        }
    }
}

TEST_CASE("hermite coefficients: derivative shift") {
    for (ActKind k : {ActKind::gelu, ActKind::erf, ActKind::tanh, ActKind::softplus, ActKind::elu}) {
        auto act = make_activation(k);
        CAPTURE(act.name);
        for (double a : {1.0, 1.3}) {
            auto v = hermite_coeffs(act, a, 8, 120);
            auto d = hermite_coeffs(act, a, 8, 120, true);
            for (int n = 1; n <= 6; ++n) CHECK(std::abs(v.c[n] - a * d.c[n - 1] / std::sqrt(double(n))) <= 1e-9);
        }
    }
}
