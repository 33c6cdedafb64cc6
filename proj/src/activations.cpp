#include "ntk/activations.hpp"

#include <cmath>
#include <numbers>

#include "ntk/errors.hpp"
#include "ntk/numerics/hermite.hpp"
#include "ntk/numerics/quadrature.hpp"

namespace ntk {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

}  // namespace

double Activation::value(double x) const {
    switch (kind) {
        case ActKind::relu: return x > 0 ? x : 0.0;
        case ActKind::relu_sqrt2: return x > 0 ? std::numbers::sqrt2 * x : 0.0;
        case ActKind::elu: return x >= 0 ? x : std::expm1(x);
        case ActKind::gelu: return x * normal_cdf(x);
        case ActKind::softplus: return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        case ActKind::erf: return std::erf(x);
        case ActKind::tanh: return std::tanh(x);
        case ActKind::identity: return x;
    }
    return 0.0;
}

double Activation::deriv(double x) const {
    switch (kind) {
        case ActKind::relu: return x >= 0 ? 1.0 : 0.0;
        case ActKind::relu_sqrt2: return x >= 0 ? std::numbers::sqrt2 : 0.0;
        case ActKind::elu: return x >= 0 ? 1.0 : std::exp(x);
        case ActKind::gelu: return normal_cdf(x) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        case ActKind::softplus: return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        case ActKind::erf: return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
        case ActKind::tanh: {
            const double th = std::tanh(x);
            return 1.0 - th * th;
        }
        case ActKind::identity: return 1.0;
    }
    return 0.0;
}

std::string to_string(ActKind kind) {
    switch (kind) {
        case ActKind::relu: return "relu";
        case ActKind::relu_sqrt2: return "relu_sqrt2";
        case ActKind::elu: return "elu";
        case ActKind::gelu: return "gelu";
        case ActKind::softplus: return "softplus";
        case ActKind::erf: return "erf";
        case ActKind::tanh: return "tanh";
        case ActKind::identity: return "identity";
    }
    return "unknown";
}

const std::vector<ActKind>& all_activation_kinds() {
    static const std::vector<ActKind> kinds = {ActKind::relu,     ActKind::relu_sqrt2, ActKind::elu,
                                               ActKind::gelu,     ActKind::softplus,   ActKind::erf,
                                               ActKind::tanh,     ActKind::identity};
    return kinds;
}

Activation make_activation(ActKind kind) {
    Activation a;
    a.kind = kind;
    a.name = to_string(kind);
    switch (kind) {
        case ActKind::relu: a.smoothness_class = 0; break;
        case ActKind::relu_sqrt2:
            a.smoothness_class = 0;
            a.growth_constant = a.derivative_bound = std::numbers::sqrt2;
            break;
        case ActKind::elu: a.smoothness_class = 1; break;
        case ActKind::gelu:
            a.smoothness_class = -1;
            // sup of Phi(x) + x phi(x), attained at x = sqrt(2)
            a.derivative_bound = normal_cdf(std::numbers::sqrt2) + std::numbers::sqrt2 * kInvSqrt2Pi * std::exp(-1.0);
            break;
        case ActKind::softplus:
            a.smoothness_class = -1;
            a.growth_offset = std::numbers::ln2;
            break;
        case ActKind::erf:
            a.smoothness_class = -1;
            a.growth_constant = a.derivative_bound = 2.0 / std::sqrt(std::numbers::pi);
            break;
        case ActKind::tanh: a.smoothness_class = -1; break;
        case ActKind::identity: a.smoothness_class = -1; break;
    }
    return a;
}

Activation activation_by_name(const std::string& name) {
    for (ActKind k : all_activation_kinds())
        if (to_string(k) == name) return make_activation(k);
    throw InvalidArgument("unknown activation '" + name + "'");
}

HermiteCoeffs hermite_coeffs(const Activation& act, double a, int K, int quad_order, bool derivative) {
    if (!(a > 0.0 && a <= 10.0)) throw InvalidArgument("hermite_coeffs: scale must lie in (0, 10]");
    if (K < 0 || K > 128) throw InvalidArgument("hermite_coeffs: truncation must lie in [0, 128]");
    if (quad_order < 2 * K || quad_order < 1)
        throw InvalidArgument("hermite_coeffs: quad_order < 2K risks aliasing");

    auto f = [&](double x) { return derivative ? act.deriv(a * x) : act.value(a * x); };

    std::vector<double> nodes, weights;
    if (!act.kinked() && quad_order <= kMaxHermiteOrder) {
        const auto r = gauss_hermite_rule(quad_order);
        nodes = r.nodes;
        weights = r.weights;
    } else {
        // Integrate against the normal density on [-R, R]; the Hermite factor
        // of degree K is negligible against the density beyond sqrt(4K+2) + 10.
        const double R = std::sqrt(4.0 * K + 2.0) + 10.0;
        const int panels = std::max(16, quad_order / 4);
        const auto r = composite_legendre_rule({-R, 0.0, R}, panels, 16);
        nodes = r.nodes;
        weights = r.weights;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            weights[i] *= kInvSqrt2Pi * std::exp(-0.5 * nodes[i] * nodes[i]);
    }

    HermiteCoeffs out;
    out.a = a;
    out.K = K;
    out.c.assign(K + 1, 0.0);
    std::vector<double> h;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double fx = f(nodes[i]);
        if (fx == 0.0) continue;
        hermite_normalized_all(K, nodes[i], h);
        const double wf = weights[i] * fx;
        for (int k = 0; k <= K; ++k) out.c[k] += wf * h[k];
        out.norm_sq += wf * fx;
    }
    double s = 0.0;
    for (double c : out.c) s += c * c;
    out.tail_bound = std::max(0.0, out.norm_sq - s);
    return out;
}

}  // namespace ntk
