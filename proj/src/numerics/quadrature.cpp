#include "ntk/numerics/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ntk/errors.hpp"
#include "ntk/numerics/hermite.hpp"

namespace ntk {

std::string to_string(QuadKind k) {
    switch (k) {
        case QuadKind::gauss_hermite_prob: return "gauss_hermite_prob";
        case QuadKind::gauss_jacobi: return "gauss_jacobi";
        case QuadKind::gauss_legendre: return "gauss_legendre";
        case QuadKind::trapezoid_circle: return "trapezoid_circle";
        case QuadKind::composite: return "composite";
    }
    return "unknown";
}

namespace {

QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0,
                            QuadKind kind) {
    const int n = static_cast<int>(diag.size());
    QuadratureRule r;
    r.kind = kind;
    if (n == 1) {
        r.nodes = {diag(0)};
        r.weights = {mu0};
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolver failed");
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.weights[i] = mu0 * v * v;
    }
    return r;
}

}  // namespace

QuadratureRule gauss_hermite_rule(int order) {
    if (order < 1) throw InvalidArgument("gauss_hermite_rule: order must be >= 1");
    if (order > kMaxHermiteOrder) throw InvalidArgument("gauss_hermite_rule: order capped at 200");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd off(std::max(order - 1, 0));
    for (int k = 1; k < order; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
    auto r = golub_welsch(diag, off, 1.0, QuadKind::gauss_hermite_prob);
    // Eigenvector-based weights lose relative accuracy in the tails, so nodes
    // are polished by Newton on the normalized polynomial and weights are
    // recomputed as Christoffel numbers 1 / sum_{k<n} Hbar_k(x)^2.
    const int n = order;
    std::vector<double> h;
    for (int i = 0; i < n; ++i) {
        double x = r.nodes[i];
        for (int it = 0; it < 3 && n > 1; ++it) {
            hermite_normalized_all(n, x, h);
            const double dp = std::sqrt(static_cast<double>(n)) * h[n - 1];
            if (dp == 0.0) break;
            x -= h[n] / dp;
        }
        hermite_normalized_all(n - 1, x, h);
        double s = 0.0;
        for (double v : h) s += v * v;
        r.nodes[i] = x;
        r.weights[i] = 1.0 / s;
    }
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
        const double w = 0.5 * (r.weights[n - 1 - i] + r.weights[i]);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    const double s = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
    for (double& w : r.weights) w /= s;
    return r;
}

QuadratureRule gauss_legendre_rule(int order, double a, double b) {
    if (order < 1) throw InvalidArgument("gauss_legendre_rule: order must be >= 1");
    QuadratureRule r;
    r.kind = QuadKind::gauss_legendre;
    r.nodes.resize(order);
    r.weights.resize(order);
    const int n = order;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = mid - half * x;
        r.nodes[n - 1 - i] = mid + half * x;
        r.weights[i] = r.weights[n - 1 - i] = half * w;
    }
    if (n == 1) {
        r.nodes[0] = mid;
        r.weights[0] = b - a;
    }
    return r;
}

QuadratureRule gauss_jacobi_rule(int order, double alpha, double beta) {
    if (order < 1) throw InvalidArgument("gauss_jacobi_rule: order must be >= 1");
    if (alpha <= -1.0 || beta <= -1.0) throw InvalidArgument("gauss_jacobi_rule: exponents must exceed -1");
    Eigen::VectorXd diag(order), off(std::max(order - 1, 0));
    const double ab = alpha + beta;
    for (int k = 0; k < order; ++k) {
        const double s = 2.0 * k + ab;
        diag(k) = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    }
    for (int k = 1; k < order; ++k) {
        const double s = 2.0 * k + ab;
        off(k - 1) = (k == 1)
                         ? std::sqrt(4.0 * (1.0 + alpha) * (1.0 + beta) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0)))
                         : std::sqrt(4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
                                     (s * s * (s + 1.0) * (s - 1.0)));
    }
    return golub_welsch(diag, off, 1.0, QuadKind::gauss_jacobi);
}

QuadratureRule trapezoid_circle_rule(int n) {
    if (n < 1) throw InvalidArgument("trapezoid_circle_rule: n must be >= 1");
    QuadratureRule r;
    r.kind = QuadKind::trapezoid_circle;
    r.nodes.resize(n);
    r.weights.assign(n, 1.0 / n);
    for (int k = 0; k < n; ++k) r.nodes[k] = 2.0 * std::numbers::pi * k / n;
    return r;
}

QuadratureRule composite_legendre_rule(const std::vector<double>& breaks, int panels_per_interval,
                                       int order) {
    if (breaks.size() < 2 || panels_per_interval < 1)
        throw InvalidArgument("composite_legendre_rule: need two breakpoints and one panel");
    const auto base = gauss_legendre_rule(order);
    QuadratureRule r;
    r.kind = QuadKind::composite;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = breaks[i], hi = breaks[i + 1];
        if (!(hi > lo)) continue;
        const double step = (hi - lo) / panels_per_interval;
        for (int p = 0; p < panels_per_interval; ++p) {
            const double a = lo + p * step;
            for (std::size_t q = 0; q < base.size(); ++q) {
                r.nodes.push_back(a + 0.5 * step * (base.nodes[q] + 1.0));
                r.weights.push_back(0.5 * step * base.weights[q]);
            }
        }
    }
    return r;
}

double hermite_eval(int n, double x) {
    if (n < 0) throw InvalidArgument("hermite_eval: negative degree");
    if (n == 0) return 1.0;
    double h0 = 1.0, h1 = x;
    for (int k = 1; k < n; ++k) {
        const double h2 = x * h1 - k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

void hermite_normalized_all(int K, double x, std::vector<double>& out) {
    out.resize(K + 1);
    out[0] = 1.0;
    if (K == 0) return;
    out[1] = x;
    for (int k = 1; k < K; ++k)
        out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) / std::sqrt(k + 1.0);
}

}  // namespace ntk
