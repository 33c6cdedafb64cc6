#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ntk {

// Eigenvalues sorted descending. For zonal operators `degree` holds the
// harmonic degree of each entry and `multiplicity` its dimension; for plain
// matrices degree is the rank index and multiplicity is 1.
struct SpectralDecomposition {
    std::vector<double> values;
    std::vector<int> degree;
    std::vector<int> multiplicity;
    Eigen::MatrixXd vectors;  // columns match `values`; empty when not requested
};

SpectralDecomposition sym_eig(const Eigen::MatrixXd& a, bool want_vectors = true);

// Largest singular value by power iteration on A^T A.
double spectral_norm(const Eigen::MatrixXd& a, double tol = 1e-9);

// Ordinary least-squares line y = intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ntk
