#pragma once

#include <string>
#include <vector>

namespace ntk {

enum class ActKind { relu, relu_sqrt2, elu, gelu, softplus, erf, tanh, identity };

struct Activation {
    ActKind kind = ActKind::relu;
    std::string name;
    int smoothness_class = 0;  // highest continuous derivative; -1 means C-infinity
    double growth_constant = 1.0;
    // Additive slack in the growth bound |s(x)| <= growth_constant*|x| + growth_offset.
    // Only softplus needs it (softplus(0) = ln 2).
    double growth_offset = 0.0;
    double derivative_bound = 1.0;

    double value(double x) const;
    double deriv(double x) const;  // right-hand value at kinks

    // True when the value or derivative has a non-smooth point at 0.
    bool kinked() const { return smoothness_class >= 0; }
};

Activation make_activation(ActKind kind);
Activation activation_by_name(const std::string& name);  // throws InvalidArgument
std::string to_string(ActKind kind);
const std::vector<ActKind>& all_activation_kinds();

struct HermiteCoeffs {
    double a = 1.0;
    int K = 0;
    std::vector<double> c;  // coefficients against H_k / sqrt(k!)
    double norm_sq = 0.0;   // E[s(a z)^2]
    double tail_bound = 0.0;
};

// c_k = <s_a, H_k/sqrt(k!)>_N with s_a(x) = s(a x), or s'(a x) when derivative is set.
// Smooth kinds use Gauss-Hermite of order quad_order (up to 200). Kinked kinds,
// and smooth kinds beyond order 200, use composite Gauss-Legendre split at 0.
HermiteCoeffs hermite_coeffs(const Activation& act, double a, int K, int quad_order, bool derivative = false);

}  // namespace ntk
