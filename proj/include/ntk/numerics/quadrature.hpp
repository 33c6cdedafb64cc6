#pragma once

#include <string>
#include <vector>

namespace ntk {

enum class QuadKind { gauss_hermite_prob, gauss_jacobi, gauss_legendre, trapezoid_circle, composite };

std::string to_string(QuadKind k);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    QuadKind kind = QuadKind::gauss_legendre;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

inline constexpr int kMaxHermiteOrder = 200;

// Nodes and weights against the standard normal density (weights sum to 1),
// by Golub-Welsch. Physicists' nodes are these divided by sqrt(2).
QuadratureRule gauss_hermite_rule(int order);

// Gauss-Legendre on [a, b] by Newton iteration on P_n.
QuadratureRule gauss_legendre_rule(int order, double a = -1.0, double b = 1.0);

// Weight (1-x)^alpha (1+x)^beta on [-1, 1], normalized to total mass 1.
QuadratureRule gauss_jacobi_rule(int order, double alpha, double beta);

// Equispaced angles 2*pi*k/n with weights 1/n.
QuadratureRule trapezoid_circle_rule(int n);

// Gauss-Legendre panels on each interval between consecutive breakpoints.
QuadratureRule composite_legendre_rule(const std::vector<double>& breaks, int panels_per_interval,
                                       int order);

}  // namespace ntk
