#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ntk/results.hpp"

namespace ntk {

enum class GridKind { uniform_circle, monte_carlo, gauss_sphere_d3 };

std::string to_string(GridKind k);
GridKind grid_kind_by_name(const std::string& name);

struct SphereGrid {
    int d = 2;
    Eigen::MatrixXd points;  // one unit vector per row
    std::vector<double> weights;
    GridKind kind = GridKind::uniform_circle;
    int n = 0;  // circle: point count; gauss_sphere_d3: latitude count (longitudes = 2n)

    int size() const { return static_cast<int>(points.rows()); }
};

inline constexpr int kMaxDegreeD3 = 32;

// uniform_circle: angles 2 pi k / n. monte_carlo: normalized Gaussian draws.
// gauss_sphere_d3: n Gauss-Legendre latitudes times 2n equispaced longitudes.
SphereGrid make_grid(int d, int n, GridKind kind, std::uint64_t seed = 0);

// Real orthonormal harmonics for the uniform probability measure.
// d = 2: index 0 is the constant, 2l-1 and 2l are sqrt2 cos(l t), sqrt2 sin(l t).
// d = 3: index l^2 + l + m, m = -l..l, with sin(|m| phi) for m < 0.
struct HarmonicCoeffs {
    int d = 2;
    int ell_max = 0;
    std::vector<double> c;

    int degree(std::size_t idx) const;
};

std::size_t harmonic_count(int d, int ell_max);
HarmonicCoeffs zero_coeffs(int d, int ell_max);

// Basis values, one row per grid point and one column per harmonic.
Eigen::MatrixXd harmonic_basis(const SphereGrid& grid, int ell_max);

HarmonicCoeffs analyze(const Eigen::VectorXd& values, const SphereGrid& grid, int ell_max);
Eigen::VectorXd synthesize(const HarmonicCoeffs& coeffs, const SphereGrid& grid);

double sobolev_norm(const HarmonicCoeffs& f, double alpha);
double sobolev_inner(const HarmonicCoeffs& f, const HarmonicCoeffs& g, double alpha);

// Pairwise supremum of |f(x) - f(y)| / |x - y|^alpha in the chordal metric.
// A lower bound for the true seminorm.
double holder_seminorm(const Eigen::VectorXd& values, const SphereGrid& grid, double alpha);
double holder_norm(const Eigen::VectorXd& values, const SphereGrid& grid, double alpha);

struct MixedHolder {
    double s00 = 0.0;  // sup |k|
    double sa0 = 0.0;  // difference quotient in the first argument
    double s0b = 0.0;  // difference quotient in the second argument
    double sab = 0.0;  // mixed second difference quotient

    double total() const { return s00 + sa0 + s0b + sab; }
};

MixedHolder mixed_holder_seminorm(const Eigen::MatrixXd& k, const SphereGrid& grid, double alpha, double beta);

enum class TargetKind { random_sobolev, named };

struct TargetSpec {
    TargetKind kind = TargetKind::random_sobolev;
    double alpha_star = 0.3;
    std::uint64_t seed = 0;
    // named targets: zero, constant, x1, abs_x1
    std::string description;
};

struct Target {
    Eigen::VectorXd values;
    HarmonicCoeffs coeffs;
};

// random_sobolev coefficients are (1+l)^{-alpha* - (d-1)/2 - 0.01} times
// independent signs, so the target lies in H^{alpha*} but not in H^{alpha*+0.02}
// as ell_max grows. ell_max < 0 selects the largest exactly resolved degree.
Target make_target(const TargetSpec& spec, const SphereGrid& grid, int ell_max = -1);

int max_exact_degree(const SphereGrid& grid);

// Columns x0..x{d-1}, weight, value.
ResultTable grid_table(const SphereGrid& grid, const Eigen::VectorXd& values);

}  // namespace ntk
