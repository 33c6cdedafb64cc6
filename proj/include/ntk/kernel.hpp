#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ntk/activations.hpp"
#include "ntk/numerics/linalg.hpp"

namespace ntk {

enum class PairMethod { mehler, quadrature, closed_form_relu, automatic };

std::string to_string(PairMethod m);
PairMethod pair_method_by_name(const std::string& name);

struct GaussPairMoment {
    double a = 1.0, b = 1.0, rho = 0.0;
    double value = 0.0;
    PairMethod method = PairMethod::automatic;  // the method actually used
};

inline constexpr int kMehlerTerms = 64;
inline constexpr double kMehlerMaxRho = 0.99;
inline constexpr int kDefaultPairQuadOrder = 100;

// E[s(u) s(v)] for (u, v) ~ N(0, [[a^2, cov], [cov, b^2]]); with `derivative`
// the activation's derivative replaces s. `automatic` picks the closed form for
// relu-type and identity activations, the Mehler series for smooth activations
// with |rho| <= 0.99, and quadrature otherwise.
GaussPairMoment gaussian_pair_expectation(const Activation& act, double a, double b, double cov, PairMethod method,
                                          bool derivative = false, int quad_order = kDefaultPairQuadOrder);

// Mehler series from precomputed coefficients of s_a and s_b.
double mehler_sum(const HermiteCoeffs& ca, const HermiteCoeffs& cb, double rho);

enum class ZonalKind { sigma, sigma_dot, ntk, custom };

struct ZonalKernel {
    int d = 2;
    std::function<double(double)> evaluator;
    std::vector<double> variance_track;  // v_0..v_L
    ZonalKind kind = ZonalKind::custom;
    int layer = 0;

    double operator()(double t) const { return evaluator(t); }
};

struct KernelValues {
    std::vector<double> sigma;  // Sigma^0..Sigma^L
    double sigma_dot = 0.0;     // dot Sigma^L
    double gamma = 0.0;         // dot Sigma^L * Sigma^{L-1}
};

// Infinite-width covariance recursion. acts holds one activation per layer
// (applied to f^1..f^L), or a single activation used for all layers. The
// derivative kernel always uses the top layer's activation.
class NtkKernel {
public:
    NtkKernel(std::vector<Activation> acts, int L, int d, PairMethod method = PairMethod::automatic);

    int depth() const { return L_; }
    int dim() const { return d_; }
    const std::vector<double>& variances() const { return v_; }
    KernelValues eval(double t) const;

    ZonalKernel sigma(int layer) const;
    ZonalKernel sigma_dot() const;
    ZonalKernel ntk() const;

    // Bounds c <= v_l <= C for l = 1..L; throws InvalidArgument when violated.
    void check_variance_bounds(double lower, double upper) const;

private:
    double layer_moment(int layer, double cov, bool derivative) const;

    std::vector<Activation> acts_;
    int L_, d_;
    PairMethod method_;
    std::vector<double> v_;
    std::vector<HermiteCoeffs> coeffs_;  // per layer, at scale sqrt(v_{l-1}); empty when unused
    HermiteCoeffs dot_coeffs_;
    bool have_dot_coeffs_ = false;
};

KernelValues sigma_recursion(const std::vector<Activation>& acts, int d, int L, double t,
                             PairMethod method = PairMethod::automatic);

// Gamma(t) = dot Sigma^L(t) Sigma^{L-1}(t). Requires L >= 2.
ZonalKernel ntk_limit(const std::vector<Activation>& acts, int d, int L, PairMethod method = PairMethod::automatic);

double sphere_area(int d);                   // |S^{d-1}|
long harmonic_multiplicity(int d, int ell);  // dimension of degree-ell harmonics on S^{d-1}

// Normalized Gegenbauer P_ell^{(d)}(t) with P(1) = 1, for ell = 0..ell_max.
void gegenbauer_all(int d, int ell_max, double t, std::vector<double>& out);

// Funk-Hecke eigenvalues against the uniform probability measure on S^{d-1},
// ordered by degree (not by size). The integral is taken in the angle theta
// with Gauss-Legendre; a second pass at twice the order must agree, otherwise
// AliasingError is raised.
SpectralDecomposition zonal_eigenvalues(const ZonalKernel& kernel, int ell_max, int quad_order);

}  // namespace ntk
