#include "ntk/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ntk/errors.hpp"

namespace ntk {

SpectralDecomposition sym_eig(const Eigen::MatrixXd& a, bool want_vectors) {
    if (a.rows() != a.cols()) throw InvalidArgument("sym_eig: matrix is not square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidArgument("sym_eig: matrix is not symmetric");
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        sym, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
    const int n = static_cast<int>(a.rows());
    SpectralDecomposition out;
    out.values.resize(n);
    out.degree.resize(n);
    out.multiplicity.assign(n, 1);
    if (want_vectors) out.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = es.eigenvalues()(n - 1 - i);
        out.degree[i] = i;
        if (want_vectors) out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

double spectral_norm(const Eigen::MatrixXd& a, double tol) {
    if (a.size() == 0) throw InvalidArgument("spectral_norm: empty matrix");
    if (a.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const Eigen::Index n = a.cols();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    if ((a * v).norm() == 0.0) {
        // Ones lies in the null space; fall back to a fixed alternating start.
        for (Eigen::Index i = 0; i < n; ++i) v(i) = (i % 2 ? -1.0 : 1.0) * (1.0 + 0.5 * i / n);
        v.normalize();
    }
    double mu = 0.0;
    for (int it = 0; it < 1000; ++it) {
        const Eigen::VectorXd w = a.transpose() * (a * v);
        mu = v.dot(w);
        const double resid = (w - mu * v).norm();
        const double wn = w.norm();
        if (wn == 0.0) return 0.0;
        v = w / wn;
        if (resid <= tol * mu) break;
    }
    return std::sqrt(std::max(mu, 0.0));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line: need >= 2 paired samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw InvalidArgument("fit_line: abscissae are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    return f;
}

}  // namespace ntk
