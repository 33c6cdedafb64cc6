#include <algorithm>
#include <cmath>
#include <limits>

#include "ntk/errors.hpp"
#include "ntk/flow.hpp"

namespace ntk {

void EnvelopeParams::validate() const {
    if (!(alpha > 0.0)) throw InvalidArgument("envelope: alpha must be positive");
    if (!(alpha <= beta / 2)) throw InvalidArgument("envelope: need alpha <= beta / 2");
    if (!(gamma > 0.0 && gamma < 1.0 - alpha)) throw InvalidArgument("envelope: need 0 < gamma < 1 - alpha");
    if (!(m > 0.0) || d < 1) throw InvalidArgument("envelope: width and dimension must be positive");
    if (!(c >= 0.0)) throw InvalidArgument("envelope: c must be nonnegative");
    if (!(k_neg > 0.0 && k_pos > 0.0)) throw InvalidArgument("envelope: initial residual norms must be positive");
    if (!(c1 > 0.0 && c2 >= 0.0)) throw InvalidArgument("envelope: need c1 > 0 and c2 >= 0");
    if (!(envelope_h(*this).h > 0.0)) throw InvalidArgument("envelope: h must be positive");
}

HBranches envelope_h(const EnvelopeParams& p) {
    HBranches h;
    const double expo = (p.beta - p.alpha) / (p.beta * (1.0 + p.gamma) - p.alpha);
    h.width_branch = std::pow(std::sqrt(p.k_neg) * std::sqrt(p.k_pos) / std::sqrt(p.m), expo);
    h.floor_branch = p.c * std::sqrt(p.d / p.m);
    h.h = std::max(h.width_branch, h.floor_branch);
    return h;
}

namespace {

// Envelope divided by c1, with the rate written as k = c2 H beta / (2 alpha).
double shape(const EnvelopeParams& p, double H, double k, double t) {
    const double r = p.beta / p.alpha;
    const double inner = H * std::pow(p.k_pos, r) + std::pow(p.k_neg, r) * std::exp(-k * t);
    return std::pow(inner, 1.0 / r) * p.k_pos;
}

double H_of(const EnvelopeParams& p) {
    return std::pow(envelope_h(p).h, p.beta * p.gamma / (p.beta - p.alpha));
}

}  // namespace

double rate_envelope(const EnvelopeParams& p, double t) {
    p.validate();
    const double H = H_of(p);
    return p.c1 * shape(p, H, p.c2 * H * p.beta / (2 * p.alpha), t);
}

EnvelopeFit envelope_fit(const std::vector<double>& times, const std::vector<double>& y, EnvelopeParams p) {
    if (times.size() != y.size()) throw InvalidArgument("envelope_fit: series lengths differ");
    if (times.size() < 10) throw InvalidArgument("envelope_fit: need at least 10 checkpoints");
    EnvelopeFit fit;
    bool all_zero = true;
    for (double v : y) all_zero = all_zero && v == 0.0;
    if (all_zero) {
        fit.skipped = true;
        fit.coverage = 1.0;
        return fit;
    }
    p.c1 = 1.0;
    p.c2 = 0.0;
    p.validate();
    fit.h = envelope_h(p);
    const double H = H_of(p);
    const double rate_scale = H * p.beta / (2 * p.alpha);

    const std::size_t ncal = std::max<std::size_t>(2, times.size() / 2);
    fit.calibration_points = ncal;
    double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    for (std::size_t i = 0; i < ncal; ++i)
        if (times[i] > 0) {
            tmin = std::min(tmin, times[i]);
            tmax = std::max(tmax, times[i]);
        }
    if (!(tmax > 0.0)) tmin = tmax = 1.0;

    // For a rate k the best admissible log c1 is the largest log residual.
    auto evaluate = [&](double logk, double* logc1) {
        const double k = std::exp(logk);
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> r;
        for (std::size_t i = 0; i < ncal; ++i) {
            if (!(y[i] > 0.0)) continue;
            r.push_back(std::log(y[i]) - std::log(shape(p, H, k, times[i])));
            best = std::max(best, r.back());
        }
        double s = 0.0;
        for (double v : r) s += (v - best) * (v - best);
        if (logc1) *logc1 = best;
        return s;
    };

    const double lo = std::log(1e-3 / tmax), hi = std::log(1e3 / tmin);
    const int grid = 400;
    double best_logk = lo, best_s = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double lk = lo + (hi - lo) * i / grid;
        const double s = evaluate(lk, nullptr);
        if (s < best_s) {
            best_s = s;
            best_logk = lk;
        }
    }
    const double step = (hi - lo) / grid;
    double a = best_logk - step, b = best_logk + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = evaluate(x1, nullptr), f2 = evaluate(x2, nullptr);
    for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = evaluate(x1, nullptr);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = evaluate(x2, nullptr);
        }
    }
    double logk = 0.5 * (a + b);
    if (evaluate(logk, nullptr) > best_s) logk = best_logk;
    double logc1 = 0.0;
    evaluate(logk, &logc1);
    fit.c1 = std::exp(logc1);
    fit.c2 = std::exp(logk) / rate_scale;

    std::size_t covered = 0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (y[i] <= fit.c1 * shape(p, H, std::exp(logk), times[i]) * (1 + 1e-9)) ++covered;
    fit.coverage = static_cast<double>(covered) / times.size();
    return fit;
}

EnvelopeFit envelope_fit(const FlowTrace& trace, EnvelopeParams p) {
    std::vector<double> sq;
    for (double v : trace.norm_l2) sq.push_back(v * v);
    if (!trace.norm_neg_alpha.empty()) {
        p.k_neg = trace.norm_neg_alpha.front();
        p.k_pos = trace.norm_alpha.front();
    }
    return envelope_fit(trace.times, sq, p);
}

}  // namespace ntk
