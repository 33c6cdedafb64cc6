#include "ntk/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ntk/errors.hpp"
#include "ntk/numerics/quadrature.hpp"

namespace ntk {

namespace {

constexpr double kPi = std::numbers::pi;

bool relu_type(const Activation& act) { return act.kind == ActKind::relu || act.kind == ActKind::relu_sqrt2; }

double closed_form(const Activation& act, double a, double b, double rho, bool derivative) {
    if (act.kind == ActKind::identity) return derivative ? 1.0 : a * b * rho;
    const double scale = act.kind == ActKind::relu_sqrt2 ? 2.0 : 1.0;
    const double theta = std::acos(rho);
    if (derivative) return scale * (kPi - theta) / (2 * kPi);
    return scale * a * b * (std::sqrt(std::max(0.0, 1.0 - rho * rho)) + rho * (kPi - theta)) / (2 * kPi);
}

double eval_fn(const Activation& act, double x, bool derivative) {
    return derivative ? act.deriv(x) : act.value(x);
}

double tensor_hermite(const Activation& act, double a, double b, double rho, bool derivative, int order) {
    const auto r = gauss_hermite_rule(std::min(order, kMaxHermiteOrder));
    const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double fu = eval_fn(act, a * r.nodes[i], derivative);
        if (fu == 0.0) continue;
        double inner = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j)
            inner += r.weights[j] * eval_fn(act, b * (rho * r.nodes[i] + s * r.nodes[j]), derivative);
        total += r.weights[i] * fu * inner;
    }
    return total;
}

// Polar coordinates with the angular range split on the rays where either
// argument changes sign, so every sector has a smooth integrand.
double polar_quadrature(const Activation& act, double a, double b, double rho, bool derivative, int order) {
    const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    auto wrap = [](double phi) {
        phi = std::fmod(phi, 2 * kPi);
        return phi < 0 ? phi + 2 * kPi : phi;
    };
    const double phi0 = wrap(std::atan2(-rho, s));
    std::vector<double> breaks = {0.0, 0.5 * kPi, 1.5 * kPi, phi0, wrap(phi0 + kPi), 2 * kPi};
    std::sort(breaks.begin(), breaks.end());
    const auto ang = composite_legendre_rule(breaks, 1, std::max(order, 8));
    const auto rad = composite_legendre_rule({0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 13.0}, 1, std::max(order / 4, 12));
    std::vector<double> rw(rad.size());
    for (std::size_t k = 0; k < rad.size(); ++k)
        rw[k] = rad.weights[k] * rad.nodes[k] * std::exp(-0.5 * rad.nodes[k] * rad.nodes[k]);
    double total = 0.0;
    for (std::size_t i = 0; i < ang.size(); ++i) {
        const double c = std::cos(ang.nodes[i]), sn = std::sin(ang.nodes[i]);
        const double du = a * c, dv = b * (rho * c + s * sn);
        double inner = 0.0;
        for (std::size_t k = 0; k < rad.size(); ++k) {
            const double fu = eval_fn(act, du * rad.nodes[k], derivative);
            if (fu == 0.0) continue;
            inner += rw[k] * fu * eval_fn(act, dv * rad.nodes[k], derivative);
        }
        total += ang.weights[i] * inner;
    }
    return total / (2 * kPi);
}

}  // namespace

std::string to_string(PairMethod m) {
    switch (m) {
        case PairMethod::mehler: return "mehler";
        case PairMethod::quadrature: return "quadrature";
        case PairMethod::closed_form_relu: return "closed_form_relu";
        case PairMethod::automatic: return "automatic";
    }
    return "unknown";
}

PairMethod pair_method_by_name(const std::string& name) {
    for (PairMethod m : {PairMethod::mehler, PairMethod::quadrature, PairMethod::closed_form_relu, PairMethod::automatic})
        if (to_string(m) == name) return m;
    throw InvalidArgument("unknown pair method '" + name + "'");
}

double mehler_sum(const HermiteCoeffs& ca, const HermiteCoeffs& cb, double rho) {
    const int K = std::min(ca.K, cb.K);
    // Horner in rho.
    double s = 0.0;
    for (int k = K; k >= 0; --k) s = s * rho + ca.c[k] * cb.c[k];
    return s;
}

GaussPairMoment gaussian_pair_expectation(const Activation& act, double a, double b, double cov, PairMethod method,
                                          bool derivative, int quad_order) {
    if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("gaussian_pair_expectation: scales must be positive");
    if (cov * cov > a * a * b * b * (1.0 + 1e-10))
        throw InvalidArgument("gaussian_pair_expectation: covariance exceeds Cauchy-Schwarz bound");
    GaussPairMoment out;
    out.a = a;
    out.b = b;
    out.rho = std::clamp(cov / (a * b), -1.0, 1.0);

    if (method == PairMethod::automatic) {
        if (relu_type(act) || act.kind == ActKind::identity)
            method = PairMethod::closed_form_relu;
        else if (!act.kinked() && std::abs(out.rho) <= kMehlerMaxRho && a <= 10.0 && b <= 10.0)
            method = PairMethod::mehler;
        else
            method = PairMethod::quadrature;
    }
    out.method = method;
    switch (method) {
        case PairMethod::closed_form_relu:
            if (!relu_type(act) && act.kind != ActKind::identity)
                throw InvalidArgument("closed form is available only for relu, relu_sqrt2 and identity");
            out.value = closed_form(act, a, b, out.rho, derivative);
            break;
        case PairMethod::mehler: {
            if (std::abs(out.rho) > kMehlerMaxRho)
                throw MethodDomainError("Mehler series requested with |rho| > 0.99");
            const auto ca = hermite_coeffs(act, a, kMehlerTerms, 2 * kMehlerTerms, derivative);
            const auto cb = (a == b) ? ca : hermite_coeffs(act, b, kMehlerTerms, 2 * kMehlerTerms, derivative);
            out.value = mehler_sum(ca, cb, out.rho);
            break;
        }
        case PairMethod::quadrature:
            out.value = act.kinked() ? polar_quadrature(act, a, b, out.rho, derivative, quad_order)
                                     : tensor_hermite(act, a, b, out.rho, derivative, quad_order);
            break;
        case PairMethod::automatic: break;
    }
    if (!std::isfinite(out.value)) throw NumericalError("gaussian_pair_expectation: non-finite value");
    return out;
}

NtkKernel::NtkKernel(std::vector<Activation> acts, int L, int d, PairMethod method)
    : acts_(std::move(acts)), L_(L), d_(d), method_(method) {
    if (L < 1) throw InvalidArgument("NtkKernel: depth must be >= 1");
    if (d < 2) throw InvalidArgument("NtkKernel: dimension must be >= 2");
    if (acts_.size() == 1) acts_.assign(L, acts_[0]);
    if (static_cast<int>(acts_.size()) != L)
        throw InvalidArgument("NtkKernel: need one activation per layer or a single shared one");
    v_.assign(L + 1, 1.0);
    coeffs_.resize(L + 1);
    for (int l = 1; l <= L; ++l) {
        const Activation& act = acts_[l - 1];
        const double a = std::sqrt(v_[l - 1]);
        const bool use_mehler = (method_ == PairMethod::mehler) ||
                                (method_ == PairMethod::automatic && !act.kinked() && act.kind != ActKind::identity);
        if (use_mehler && a <= 10.0) coeffs_[l] = hermite_coeffs(act, a, kMehlerTerms, 2 * kMehlerTerms);
        v_[l] = layer_moment(l, v_[l - 1], false);
        if (!(v_[l] > 0.0)) throw NumericalError("NtkKernel: variance collapsed to zero at layer " + std::to_string(l));
    }
    const Activation& top = acts_[L - 1];
    const bool dot_mehler = (method_ == PairMethod::mehler) ||
                            (method_ == PairMethod::automatic && !top.kinked() && top.kind != ActKind::identity);
    const double a_top = std::sqrt(v_[L - 1]);
    if (dot_mehler && a_top <= 10.0) {
        dot_coeffs_ = hermite_coeffs(top, a_top, kMehlerTerms, 2 * kMehlerTerms, true);
        have_dot_coeffs_ = true;
    }
}

double NtkKernel::layer_moment(int layer, double cov, bool derivative) const {
    const Activation& act = acts_[layer - 1];
    const double a = std::sqrt(v_[layer - 1]);
    const HermiteCoeffs* c = derivative ? (have_dot_coeffs_ ? &dot_coeffs_ : nullptr)
                                        : (coeffs_[layer].c.empty() ? nullptr : &coeffs_[layer]);
    const double rho = std::clamp(cov / (a * a), -1.0, 1.0);
    if (c && std::abs(rho) <= kMehlerMaxRho) return mehler_sum(*c, *c, rho);
    PairMethod m = method_;
    if (m == PairMethod::mehler) m = PairMethod::quadrature;  // fallback outside the series radius
    return gaussian_pair_expectation(act, a, a, cov, m, derivative).value;
}

KernelValues NtkKernel::eval(double t) const {
    if (!(t >= -1.0 - 1e-12 && t <= 1.0 + 1e-12)) throw InvalidArgument("NtkKernel::eval: t outside [-1, 1]");
    t = std::clamp(t, -1.0, 1.0);
    KernelValues kv;
    kv.sigma.resize(L_ + 1);
    kv.sigma[0] = t;
    for (int l = 1; l <= L_; ++l) {
        // Roundoff can push the covariance slightly past the variance.
        const double cov = std::clamp(kv.sigma[l - 1], -v_[l - 1], v_[l - 1]);
        kv.sigma[l] = (t == 1.0) ? v_[l] : layer_moment(l, cov, false);
    }
    const double cov_top = std::clamp(kv.sigma[L_ - 1], -v_[L_ - 1], v_[L_ - 1]);
    kv.sigma_dot = layer_moment(L_, cov_top, true);
    kv.gamma = L_ >= 2 ? kv.sigma_dot * kv.sigma[L_ - 1] : 0.0;
    return kv;
}

ZonalKernel NtkKernel::sigma(int layer) const {
    if (layer < 0 || layer > L_) throw InvalidArgument("NtkKernel::sigma: layer out of range");
    ZonalKernel z;
    z.d = d_;
    z.kind = ZonalKind::sigma;
    z.layer = layer;
    z.variance_track = v_;
    auto self = *this;
    z.evaluator = [self, layer](double t) { return self.eval(t).sigma[layer]; };
    return z;
}

ZonalKernel NtkKernel::sigma_dot() const {
    ZonalKernel z;
    z.d = d_;
    z.kind = ZonalKind::sigma_dot;
    z.layer = L_;
    z.variance_track = v_;
    auto self = *this;
    z.evaluator = [self](double t) { return self.eval(t).sigma_dot; };
    return z;
}

ZonalKernel NtkKernel::ntk() const {
    if (L_ < 2) throw InvalidArgument("ntk requires depth L >= 2");
    ZonalKernel z;
    z.d = d_;
    z.kind = ZonalKind::ntk;
    z.layer = L_;
    z.variance_track = v_;
    auto self = *this;
    z.evaluator = [self](double t) { return self.eval(t).gamma; };
    return z;
}

void NtkKernel::check_variance_bounds(double lower, double upper) const {
    for (int l = 1; l <= L_; ++l)
        if (v_[l] < lower || v_[l] > upper)
            throw InvalidArgument("variance v_" + std::to_string(l) + " = " + std::to_string(v_[l]) +
                                  " outside configured bounds");
}

KernelValues sigma_recursion(const std::vector<Activation>& acts, int d, int L, double t, PairMethod method) {
    return NtkKernel(acts, L, d, method).eval(t);
}

ZonalKernel ntk_limit(const std::vector<Activation>& acts, int d, int L, PairMethod method) {
    if (L < 2) throw InvalidArgument("ntk_limit: depth L must be >= 2");
    return NtkKernel(acts, L, d, method).ntk();
}

double sphere_area(int d) { return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d); }

long harmonic_multiplicity(int d, int ell) {
    if (ell < 0 || d < 2) throw InvalidArgument("harmonic_multiplicity: bad arguments");
    if (ell == 0) return 1;
    if (d == 2) return 2;
    // (2l + d - 2)/l * C(l + d - 3, l - 1)
    double binom = 1.0;
    for (int i = 1; i <= ell - 1; ++i) binom = binom * (d - 2 + i) / i;
    return std::lround((2.0 * ell + d - 2) / ell * binom);
}

void gegenbauer_all(int d, int ell_max, double t, std::vector<double>& out) {
    out.assign(ell_max + 1, 0.0);
    out[0] = 1.0;
    if (ell_max == 0) return;
    out[1] = t;
    for (int l = 1; l < ell_max; ++l)
        out[l + 1] = ((2.0 * l + d - 2) * t * out[l] - l * out[l - 1]) / (l + d - 2.0);
}

namespace {

std::vector<double> funk_hecke_pass(const ZonalKernel& k, int ell_max, int order) {
    const int d = k.d;
    const auto r = gauss_legendre_rule(order, 0.0, kPi);
    const double ratio = sphere_area(d - 1) / sphere_area(d);
    std::vector<double> lam(ell_max + 1, 0.0), p;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double th = r.nodes[i];
        const double t = std::cos(th);
        const double w = r.weights[i] * std::pow(std::sin(th), d - 2) * k(t);
        if (d == 2) {
            for (int l = 0; l <= ell_max; ++l) lam[l] += w * std::cos(l * th);
        } else {
            gegenbauer_all(d, ell_max, t, p);
            for (int l = 0; l <= ell_max; ++l) lam[l] += w * p[l];
        }
    }
    for (double& v : lam) v *= ratio;
    return lam;
}

}  // namespace

SpectralDecomposition zonal_eigenvalues(const ZonalKernel& kernel, int ell_max, int quad_order) {
    if (kernel.d < 2) throw InvalidArgument("zonal_eigenvalues: d must be >= 2");
    if (ell_max < 0) throw InvalidArgument("zonal_eigenvalues: ell_max must be >= 0");
    if (quad_order < 4 * ell_max || quad_order < 1)
        throw InvalidArgument("zonal_eigenvalues: quad_order must be >= 4 * ell_max");
    const auto lam = funk_hecke_pass(kernel, ell_max, quad_order);
    const auto lam2 = funk_hecke_pass(kernel, ell_max, 2 * quad_order);
    double scale = 0.0;
    for (double v : lam2) scale = std::max(scale, std::abs(v));
    for (int l = 0; l <= ell_max; ++l)
        if (std::abs(lam[l] - lam2[l]) > 1e-9 * scale + 1e-14)
            throw AliasingError("zonal_eigenvalues: degree " + std::to_string(l) +
                                " unstable under quadrature doubling; raise quad_order");
    SpectralDecomposition out;
    out.values = lam2;
    for (int l = 0; l <= ell_max; ++l) {
        out.degree.push_back(l);
        out.multiplicity.push_back(static_cast<int>(harmonic_multiplicity(kernel.d, l)));
    }
    return out;
}

}  // namespace ntk
