#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <thread>

#include "doctest.h"
#include "ntk/errors.hpp"
#include "ntk/numerics/hermite.hpp"
#include "ntk/numerics/linalg.hpp"
#include "ntk/numerics/ode.hpp"
#include "ntk/numerics/quadrature.hpp"
#include "ntk/numerics/rng.hpp"

using namespace ntk;

namespace {

double double_factorial(int k) {
    double r = 1.0;
    for (int i = k; i > 1; i -= 2) r *= i;
    return r;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

// Characteristic polynomial by Faddeev-LeVerrier, roots from the companion
// matrix, each root polished by Newton on det(A - x I) through LU.
std::vector<double> charpoly_eigenvalues(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<double> c(n + 1);  // p(x) = sum c[k] x^k, c[n] = 1
    c[n] = 1.0;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        M = a * M + c[n - k + 1] * I;
        c[n - k] = -(a * M).trace() / k;
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<double> roots;
    for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i).real());
    for (double& x : roots) {
        for (int it = 0; it < 50; ++it) {
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(a - x * I);
            const double det = lu.determinant();
            // d/dx det(A - xI) = -det * tr((A - xI)^{-1})
            const double ddet = -det * lu.inverse().trace();
            if (ddet == 0.0 || !std::isfinite(ddet)) break;
            const double dx = det / ddet;
            x -= dx;
            if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
        }
    }
    std::sort(roots.begin(), roots.end(), std::greater<>());
    return roots;
}

}  // namespace

TEST_CASE("gauss-hermite rule basics") {
    auto r1 = gauss_hermite_rule(1);
    REQUIRE(r1.size() == 1);
    CHECK(r1.nodes[0] == doctest::Approx(0.0));
    CHECK(r1.weights[0] == doctest::Approx(1.0));
    CHECK(r1.kind == QuadKind::gauss_hermite_prob);

    auto r2 = gauss_hermite_rule(2);
    CHECK(r2.integrate([](double x) { return x * x; }) == doctest::Approx(1.0).epsilon(1e-14));
    auto r3 = gauss_hermite_rule(3);
    CHECK(r3.integrate([](double x) { return x * x * x * x; }) == doctest::Approx(3.0).epsilon(1e-14));

    CHECK_THROWS_AS(gauss_hermite_rule(0), InvalidArgument);
    CHECK_THROWS_AS(gauss_hermite_rule(201), InvalidArgument);
}

TEST_CASE("gauss-hermite exactness up to degree 2n-1") {
    for (int order : {4, 10, 40, 100, 200}) {
        auto r = gauss_hermite_rule(order);
        double wsum = 0;
        for (double w : r.weights) {
            CHECK(w >= 0.0);
            wsum += w;
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
        const int kmax = std::min(2 * order - 1, 24);
        for (int k = 0; k <= kmax; ++k) {
            const double exact = (k % 2) ? 0.0 : double_factorial(k - 1);
            const double got = r.integrate([k](double x) { return std::pow(x, k); });
            // odd moments cancel; scale the tolerance by E|x|^k
            const double scale = double_factorial(k % 2 ? k : k - 1);
            CHECK(std::abs(got - exact) <= 1e-12 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("hermite polynomials") {
    CHECK(hermite_eval(0, 3.7) == 1.0);
    CHECK(hermite_eval(1, 0.7) == doctest::Approx(0.7));
    CHECK(hermite_eval(3, 2.0) == doctest::Approx(2.0));
    CHECK(hermite_eval(4, 1.5) == doctest::Approx(std::pow(1.5, 4) - 6 * 1.5 * 1.5 + 3));
    // Physicists' H_3(y) = 8y^3 - 12y relates by He_3(x) = 2^{-3/2} H_3(x / sqrt 2).
    const double x = 0.9, y = x / std::numbers::sqrt2;
    CHECK(hermite_eval(3, x) == doctest::Approx(std::pow(2.0, -1.5) * (8 * y * y * y - 12 * y)));

    std::vector<double> h;
    hermite_normalized_all(10, 1.3, h);
    for (int k = 0; k <= 10; ++k) CHECK(h[k] == doctest::Approx(hermite_eval(k, 1.3) / std::sqrt(factorial(k))));
}

TEST_CASE("hermite orthonormality") {
    auto r = gauss_hermite_rule(40);
    for (int n = 0; n <= 12; ++n)
        for (int m = 0; m <= 12; ++m) {
            const double v = r.integrate([&](double x) { return hermite_eval(n, x) * hermite_eval(m, x); }) /
                             std::sqrt(factorial(n) * factorial(m));
            CHECK(std::abs(v - (n == m ? 1.0 : 0.0)) <= 1e-8);
        }
}

TEST_CASE("gauss-legendre and composite rules") {
    auto r = gauss_legendre_rule(10, 0.0, 2.0);
    CHECK(r.integrate([](double x) { return std::pow(x, 19); }) == doctest::Approx(std::pow(2.0, 20) / 20).epsilon(1e-13));
    auto one = gauss_legendre_rule(1, 1.0, 3.0);
    CHECK(one.nodes[0] == doctest::Approx(2.0));
    CHECK(one.weights[0] == doctest::Approx(2.0));
    auto big = gauss_legendre_rule(300);
    CHECK(big.integrate([](double x) { return std::cos(x); }) == doctest::Approx(2 * std::sin(1.0)).epsilon(1e-14));

    auto c = composite_legendre_rule({-1.0, 0.0, 2.0}, 4, 8);
    CHECK(c.size() == 64);
    CHECK(c.integrate([](double x) { return std::abs(x); }) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("gauss-jacobi moments") {
    // Weight (1-x)(1+x)^2 has mass 4/3 * ... use a dense Legendre oracle.
    for (auto [al, be] : {std::pair{1.0, 2.0}, std::pair{0.0, 0.0}, std::pair{3.0, 0.5}}) {
        auto rj = gauss_jacobi_rule(12, al, be);
        auto gl = composite_legendre_rule({-1.0, 1.0}, 400, 20);
        auto w = [&](double x) { return std::pow(1 - x, al) * std::pow(1 + x, be); };
        const double mass = gl.integrate(w);
        for (int k = 0; k <= 23; ++k) {
            const double exact = gl.integrate([&](double x) { return w(x) * std::pow(x, k); }) / mass;
            const double tol = be == 0.5 ? 1e-6 : 1e-12;
            CHECK(rj.integrate([&](double x) { return std::pow(x, k); }) == doctest::Approx(exact).epsilon(tol));
        }
    }
}

TEST_CASE("trapezoid circle rule") {
    auto r = trapezoid_circle_rule(64);
    CHECK(r.integrate([](double t) { return std::cos(t) * std::cos(t); }) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sym_eig") {
    auto id = sym_eig(Eigen::MatrixXd::Identity(3, 3));
    for (double v : id.values) CHECK(v == doctest::Approx(1.0));
    Eigen::MatrixXd d = Eigen::Vector3d(3, 1, 2).asDiagonal();
    auto dd = sym_eig(d);
    CHECK(dd.values[0] == doctest::Approx(3));
    CHECK(dd.values[1] == doctest::Approx(2));
    CHECK(dd.values[2] == doctest::Approx(1));

    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
    asym(0, 1) = 1e-6;
    CHECK_THROWS_AS(sym_eig(asym), InvalidArgument);

    RngStream rng(7, 0);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd g(10, 14);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
        Eigen::MatrixXd w = g * g.transpose() / 14.0;
        auto sd = sym_eig(w);
        auto oracle = charpoly_eigenvalues(w);
        for (int i = 0; i < 10; ++i) CHECK(std::abs(sd.values[i] - oracle[i]) <= 1e-8);
        Eigen::MatrixXd rec = sd.vectors * Eigen::Map<Eigen::VectorXd>(sd.values.data(), 10).asDiagonal() *
                              sd.vectors.transpose();
        CHECK((rec - w).cwiseAbs().maxCoeff() <= 1e-8 * w.cwiseAbs().maxCoeff());
        for (int i = 0; i + 1 < 10; ++i) CHECK(sd.values[i] >= sd.values[i + 1]);
    }
}

TEST_CASE("spectral norm") {
    CHECK(spectral_norm(Eigen::MatrixXd::Zero(4, 3)) == 0.0);
    Eigen::VectorXd u(3), v(4);
    u << 2, 0, 0;
    v << 0, 3, 0, 0;
    CHECK(spectral_norm(u * v.transpose()) == doctest::Approx(6.0).epsilon(1e-12));
    // ones is orthogonal to v: the fallback start vector must still find it
    Eigen::VectorXd v2(2);
    v2 << 1, -1;
    CHECK(spectral_norm(u * v2.transpose()) == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-12));

    RngStream rng(11, 3);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd a(20, 20);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
        const double tol = 1e-9;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
        const double s = svd.singularValues()(0);
        CHECK(std::abs(spectral_norm(a, tol) - s) <= tol * s);
    }
}

TEST_CASE("line fit") {
    auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(fit_line({1, 1}, {0, 2}), InvalidArgument);
}

TEST_CASE("ode_solve examples") {
    Eigen::VectorXd y0(1);
    y0 << 1.0;
    auto decay = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; };
    auto tr = ode_solve(decay, y0, 1.0, 1e-10);
    CHECK(tr.t.back() == 1.0);
    CHECK(std::abs(tr.y.back()(0) - std::exp(-1.0)) <= 1e-8);

    auto zero = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = Eigen::VectorXd::Zero(y.size()); };
    auto tz = ode_solve(zero, y0, 3.0, 1e-6);
    for (auto& y : tz.y) CHECK(y(0) == 1.0);

    // z' = -z^2 + z, z(0) = 2: z(t) = 1 / (1 + (1/z0 - 1) e^{-t})
    y0 << 2.0;
    auto bern = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y.cwiseProduct(y) + y; };
    auto tb = ode_solve(bern, y0, 1.0, 1e-10);
    const double exact = 1.0 / (1.0 + (0.5 - 1.0) * std::exp(-1.0));
    CHECK(std::abs(tb.y.back()(0) - exact) <= 1e-8);

    CHECK_THROWS_AS(ode_solve(decay, y0, 0.0, 1e-6), InvalidArgument);
    CHECK_THROWS_AS(ode_solve(decay, y0, 1.0, 0.1), InvalidArgument);
}

TEST_CASE("ode_solve tolerance halving") {
    Eigen::VectorXd y0(2);
    y0 << 1.0, 0.0;
    auto osc = [](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2);
        dy(0) = y(1);
        dy(1) = -y(0) - 0.1 * y(1) + std::sin(t);
    };
    for (double tol : {1e-3, 1e-5, 1e-7}) {
        auto a = ode_solve(osc, y0, 10.0, tol).y.back();
        auto b = ode_solve(osc, y0, 10.0, tol / 2).y.back();
        CHECK((a - b).norm() <= 10 * tol * std::max(1.0, b.norm()));
    }
}

TEST_CASE("ode_solve blow-up raises stiffness error with partial trajectory") {
    Eigen::VectorXd y0(1);
    y0 << 1.0;
    auto blow = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y.cwiseProduct(y); };
    bool caught = false;
    try {
        ode_solve(blow, y0, 2.0, 1e-6);
    } catch (const IntegrationFailure& e) {
        caught = true;
        CHECK(e.partial.t.size() > 1);
        CHECK(e.partial.t.back() < 1.01);
        CHECK(std::abs(e.partial.y.back()(0)) > 1e3);
    }
    CHECK(caught);
}

TEST_CASE("ode_solve output times, observer and stop event") {
    Eigen::VectorXd y0(1);
    y0 << 1.0;
    auto decay = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; };
    OdeOptions o;
    o.output_times = {0.5, 1.0, 2.0};
    long steps = 0;
    o.on_step = [&](double, const Eigen::VectorXd& y, const Eigen::VectorXd& dy) {
        ++steps;
        CHECK(dy(0) == doctest::Approx(-y(0)));
    };
    auto tr = ode_solve(decay, y0, 2.0, 1e-9, o);
    REQUIRE(tr.t.size() == 4);
    CHECK(tr.t[1] == 0.5);
    CHECK(tr.y[1](0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
    CHECK(steps == tr.accepted_steps);

    OdeOptions s;
    s.stop = [](double, const Eigen::VectorXd& y) { return y(0) < 0.5; };
    auto ts = ode_solve(decay, y0, 5.0, 1e-8, s);
    CHECK(ts.stopped_by_event);
    CHECK(ts.y.back()(0) < 0.5);
    CHECK(ts.t.back() < 5.0);
}

TEST_CASE("rng determinism across threads") {
    auto draw = [](std::uint64_t stream) {
        RngStream r(42, stream);
        std::vector<double> v(1000);
        for (double& x : v) x = r.normal();
        return v;
    };
    std::vector<std::vector<double>> seq(4), par(4);
    for (int s = 0; s < 4; ++s) seq[s] = draw(s);
    std::vector<std::thread> th;
    for (int s = 0; s < 4; ++s) th.emplace_back([&, s] { par[s] = draw(s); });
    for (auto& t : th) t.join();
    for (int s = 0; s < 4; ++s) CHECK(seq[s] == par[s]);
    CHECK(seq[0] != seq[1]);

    RngStream a(1, 0), b(2, 0);
    CHECK(a.next_u64() != b.next_u64());
    RngStream u(3, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK((x >= 0.0 && x < 1.0));
        const int r = u.rademacher();
        CHECK((r == 1 || r == -1));
    }
}
