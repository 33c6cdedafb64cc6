#include "ntk/sphere.hpp"

#include <cmath>
#include <numbers>

#include "ntk/errors.hpp"
#include "ntk/kernel.hpp"
#include "ntk/numerics/quadrature.hpp"
#include "ntk/numerics/rng.hpp"

namespace ntk {

namespace {

constexpr double kPi = std::numbers::pi;

// Fully normalized associated Legendre functions (geodesy convention), so that
// Pbar_lm(cos t) cos(m p) has unit mean square on the sphere.
void legendre_normalized(int ell_max, double ct, double st, std::vector<double>& p) {
    const int w = ell_max + 1;
    p.assign(static_cast<std::size_t>(w) * w, 0.0);
    auto at = [&](int l, int m) -> double& { return p[static_cast<std::size_t>(l) * w + m]; };
    at(0, 0) = 1.0;
    if (ell_max == 0) return;
    at(1, 1) = std::sqrt(3.0) * st;
    for (int m = 2; m <= ell_max; ++m) at(m, m) = std::sqrt((2.0 * m + 1) / (2.0 * m)) * st * at(m - 1, m - 1);
    for (int m = 0; m < ell_max; ++m) at(m + 1, m) = std::sqrt(2.0 * m + 3) * ct * at(m, m);
    for (int m = 0; m <= ell_max; ++m)
        for (int l = m + 2; l <= ell_max; ++l) {
            const double a = std::sqrt((2.0 * l - 1) * (2.0 * l + 1) / ((l - m) * double(l + m)));
            const double b = std::sqrt((2.0 * l + 1) * (l + m - 1.0) * (l - m - 1.0) / ((l - m) * double(l + m) * (2.0 * l - 3)));
            at(l, m) = a * ct * at(l - 1, m) - b * at(l - 2, m);
        }
}

}  // namespace

std::string to_string(GridKind k) {
    switch (k) {
        case GridKind::uniform_circle: return "uniform_circle";
        case GridKind::monte_carlo: return "monte_carlo";
        case GridKind::gauss_sphere_d3: return "gauss_sphere_d3";
    }
    return "unknown";
}

GridKind grid_kind_by_name(const std::string& name) {
    for (GridKind k : {GridKind::uniform_circle, GridKind::monte_carlo, GridKind::gauss_sphere_d3})
        if (to_string(k) == name) return k;
    throw InvalidArgument("unknown grid kind '" + name + "'");
}

SphereGrid make_grid(int d, int n, GridKind kind, std::uint64_t seed) {
    if (d < 2) throw InvalidArgument("make_grid: d must be >= 2");
    if (n < 4 && kind != GridKind::gauss_sphere_d3) throw InvalidArgument("make_grid: n must be >= 4");
    SphereGrid g;
    g.d = d;
    g.kind = kind;
    g.n = n;
    switch (kind) {
        case GridKind::uniform_circle: {
            if (d != 2) throw InvalidArgument("make_grid: uniform_circle requires d = 2");
            g.points.resize(n, 2);
            for (int k = 0; k < n; ++k) {
                const double t = 2 * kPi * k / n;
                g.points(k, 0) = std::cos(t);
                g.points(k, 1) = std::sin(t);
            }
            g.weights.assign(n, 1.0 / n);
            break;
        }
        case GridKind::monte_carlo: {
            RngStream rng(seed, 0x5148u);
            g.points.resize(n, d);
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                do {
                    s = 0.0;
                    for (int j = 0; j < d; ++j) {
                        g.points(k, j) = rng.normal();
                        s += g.points(k, j) * g.points(k, j);
                    }
                } while (s < 1e-300);
                g.points.row(k) /= std::sqrt(s);
            }
            g.weights.assign(n, 1.0 / n);
            break;
        }
        case GridKind::gauss_sphere_d3: {
            if (d != 3) throw InvalidArgument("make_grid: gauss_sphere_d3 requires d = 3");
            if (n < 2) throw InvalidArgument("make_grid: gauss_sphere_d3 needs >= 2 latitudes");
            const auto gl = gauss_legendre_rule(n);
            const int nlon = 2 * n;
            g.points.resize(n * nlon, 3);
            g.weights.resize(n * nlon);
            for (int i = 0; i < n; ++i) {
                const double ct = gl.nodes[i], st = std::sqrt(std::max(0.0, 1 - ct * ct));
                for (int j = 0; j < nlon; ++j) {
                    const double ph = 2 * kPi * j / nlon;
                    const int r = i * nlon + j;
                    g.points(r, 0) = st * std::cos(ph);
                    g.points(r, 1) = st * std::sin(ph);
                    g.points(r, 2) = ct;
                    g.weights[r] = 0.5 * gl.weights[i] / nlon;
                }
            }
            break;
        }
    }
    return g;
}

int HarmonicCoeffs::degree(std::size_t idx) const {
    if (d == 2) return static_cast<int>((idx + 1) / 2);
    return static_cast<int>(std::floor(std::sqrt(static_cast<double>(idx)) + 1e-9));
}

std::size_t harmonic_count(int d, int ell_max) {
    if (d == 2) return 2 * static_cast<std::size_t>(ell_max) + 1;
    if (d == 3) return static_cast<std::size_t>(ell_max + 1) * (ell_max + 1);
    throw InvalidArgument("harmonic synthesis supports d = 2 and d = 3 only");
}

HarmonicCoeffs zero_coeffs(int d, int ell_max) {
    HarmonicCoeffs h;
    h.d = d;
    h.ell_max = ell_max;
    h.c.assign(harmonic_count(d, ell_max), 0.0);
    return h;
}

int max_exact_degree(const SphereGrid& grid) {
    switch (grid.kind) {
        case GridKind::uniform_circle: return (grid.n - 1) / 2;
        case GridKind::gauss_sphere_d3: return std::min(grid.n - 1, kMaxDegreeD3);
        case GridKind::monte_carlo: break;
    }
    throw InvalidArgument("monte_carlo grids do not support exact harmonic analysis");
}

Eigen::MatrixXd harmonic_basis(const SphereGrid& grid, int ell_max) {
    if (ell_max < 0) throw InvalidArgument("harmonic_basis: ell_max must be >= 0");
    const int N = grid.size();
    Eigen::MatrixXd B(N, harmonic_count(grid.d, ell_max));
    if (grid.d == 2) {
        for (int q = 0; q < N; ++q) {
            const double t = std::atan2(grid.points(q, 1), grid.points(q, 0));
            B(q, 0) = 1.0;
            for (int l = 1; l <= ell_max; ++l) {
                B(q, 2 * l - 1) = std::numbers::sqrt2 * std::cos(l * t);
                B(q, 2 * l) = std::numbers::sqrt2 * std::sin(l * t);
            }
        }
    } else if (grid.d == 3) {
        if (ell_max > kMaxDegreeD3) throw InvalidArgument("harmonic_basis: d = 3 degree capped at 32");
        std::vector<double> p;
        const int w = ell_max + 1;
        for (int q = 0; q < N; ++q) {
            const double x = grid.points(q, 0), y = grid.points(q, 1), z = grid.points(q, 2);
            const double st = std::sqrt(x * x + y * y);
            const double ph = std::atan2(y, x);
            legendre_normalized(ell_max, z, st, p);
            for (int l = 0; l <= ell_max; ++l) {
                const int base = l * l + l;
                B(q, base) = p[static_cast<std::size_t>(l) * w];
                for (int m = 1; m <= l; ++m) {
                    const double plm = p[static_cast<std::size_t>(l) * w + m];
                    B(q, base + m) = plm * std::cos(m * ph);
                    B(q, base - m) = plm * std::sin(m * ph);
                }
            }
        }
    } else {
        throw InvalidArgument("harmonic_basis: d must be 2 or 3");
    }
    return B;
}

HarmonicCoeffs analyze(const Eigen::VectorXd& values, const SphereGrid& grid, int ell_max) {
    if (values.size() != grid.size()) throw InvalidArgument("analyze: value count does not match grid");
    if (grid.kind == GridKind::monte_carlo) throw InvalidArgument("analyze: needs a structured grid");
    if (ell_max > max_exact_degree(grid))
        throw InvalidArgument("analyze: ell_max " + std::to_string(ell_max) + " aliases on this grid (max " +
                              std::to_string(max_exact_degree(grid)) + ")");
    const Eigen::MatrixXd B = harmonic_basis(grid, ell_max);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), grid.size());
    const Eigen::VectorXd c = B.transpose() * values.cwiseProduct(w);
    HarmonicCoeffs h;
    h.d = grid.d;
    h.ell_max = ell_max;
    h.c.assign(c.data(), c.data() + c.size());
    return h;
}

Eigen::VectorXd synthesize(const HarmonicCoeffs& coeffs, const SphereGrid& grid) {
    if (coeffs.d != grid.d) throw InvalidArgument("synthesize: dimension mismatch");
    const Eigen::MatrixXd B = harmonic_basis(grid, coeffs.ell_max);
    return B * Eigen::Map<const Eigen::VectorXd>(coeffs.c.data(), coeffs.c.size());
}

double sobolev_norm(const HarmonicCoeffs& f, double alpha) { return std::sqrt(sobolev_inner(f, f, alpha)); }

double sobolev_inner(const HarmonicCoeffs& f, const HarmonicCoeffs& g, double alpha) {
    if (f.d != g.d) throw InvalidArgument("sobolev_inner: dimension mismatch");
    const std::size_t n = std::min(f.c.size(), g.c.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(1.0 + f.degree(i), 2 * alpha) * f.c[i] * g.c[i];
    return s;
}

double holder_seminorm(const Eigen::VectorXd& values, const SphereGrid& grid, double alpha) {
    if (grid.size() < 2) throw InvalidArgument("holder_seminorm: need >= 2 points");
    if (values.size() != grid.size()) throw InvalidArgument("holder_seminorm: value count does not match grid");
    double best = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        for (int j = i + 1; j < grid.size(); ++j) {
            const double dist = (grid.points.row(i) - grid.points.row(j)).norm();
            if (dist == 0.0) continue;
            best = std::max(best, std::abs(values(i) - values(j)) / std::pow(dist, alpha));
        }
    return best;
}

double holder_norm(const Eigen::VectorXd& values, const SphereGrid& grid, double alpha) {
    return values.cwiseAbs().maxCoeff() + holder_seminorm(values, grid, alpha);
}

MixedHolder mixed_holder_seminorm(const Eigen::MatrixXd& k, const SphereGrid& grid, double alpha, double beta) {
    const int n = grid.size();
    if (n < 2) throw InvalidArgument("mixed_holder_seminorm: need >= 2 points");
    if (k.rows() != n || k.cols() != n) throw InvalidArgument("mixed_holder_seminorm: kernel shape does not match grid");
    Eigen::MatrixXd da(n, n), db(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dist = (grid.points.row(i) - grid.points.row(j)).norm();
            da(i, j) = dist > 0 ? std::pow(dist, -alpha) : 0.0;
            db(i, j) = dist > 0 ? std::pow(dist, -beta) : 0.0;
        }
    MixedHolder h;
    h.s00 = k.cwiseAbs().maxCoeff();
    for (int x = 0; x < n; ++x)
        for (int xb = x + 1; xb < n; ++xb) {
            if (da(x, xb) == 0.0) continue;
            for (int y = 0; y < n; ++y) {
                h.sa0 = std::max(h.sa0, std::abs(k(x, y) - k(xb, y)) * da(x, xb));
                h.s0b = std::max(h.s0b, std::abs(k(y, x) - k(y, xb)) * db(x, xb));
            }
            for (int y = 0; y < n; ++y)
                for (int yb = y + 1; yb < n; ++yb) {
                    if (db(y, yb) == 0.0) continue;
                    const double mixed = k(x, y) - k(xb, y) - k(x, yb) + k(xb, yb);
                    h.sab = std::max(h.sab, std::abs(mixed) * da(x, xb) * db(y, yb));
                }
        }
    return h;
}

Target make_target(const TargetSpec& spec, const SphereGrid& grid, int ell_max) {
    if (ell_max < 0) ell_max = max_exact_degree(grid);
    Target t;
    if (spec.kind == TargetKind::random_sobolev) {
        t.coeffs = zero_coeffs(grid.d, ell_max);
        RngStream rng(spec.seed, 0x7a7a);
        const double expo = -spec.alpha_star - 0.5 * (grid.d - 1) - 0.01;
        for (std::size_t i = 0; i < t.coeffs.c.size(); ++i)
            t.coeffs.c[i] = std::pow(1.0 + t.coeffs.degree(i), expo) * rng.rademacher();
        t.values = synthesize(t.coeffs, grid);
        return t;
    }
    const int n = grid.size();
    t.values.resize(n);
    const std::string& name = spec.description;
    for (int q = 0; q < n; ++q) {
        const double x1 = grid.points(q, 0);
        if (name == "zero") t.values(q) = 0.0;
        else if (name == "constant") t.values(q) = 1.0;
        else if (name == "x1") t.values(q) = x1;
        else if (name == "abs_x1") t.values(q) = std::abs(x1);
        else throw InvalidArgument("make_target: unknown named target '" + name + "'");
    }
    t.coeffs = analyze(t.values, grid, ell_max);
    return t;
}

ResultTable grid_table(const SphereGrid& grid, const Eigen::VectorXd& values) {
    if (values.size() != grid.size()) throw InvalidArgument("grid_table: value count does not match grid");
    std::vector<Column> cols;
    for (int j = 0; j < grid.d; ++j) cols.push_back({"x" + std::to_string(j), ColumnType::real});
    cols.push_back({"weight", ColumnType::real});
    cols.push_back({"value", ColumnType::real});
    ResultTable t("grid", cols);
    for (int q = 0; q < grid.size(); ++q) {
        std::vector<Cell> row;
        for (int j = 0; j < grid.d; ++j) row.emplace_back(grid.points(q, j));
        row.emplace_back(grid.weights[q]);
        row.emplace_back(values(q));
        t.add_row(std::move(row));
    }
    return t;
}

}  // namespace ntk
