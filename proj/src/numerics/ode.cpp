#include "ntk/numerics/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ntk {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the 5th- and embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double err_norm(const Eigen::VectorXd& e, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double atol,
                double rtol) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        s += (e(i) / sc) * (e(i) / sc);
    }
    return std::sqrt(s / std::max<Eigen::Index>(e.size(), 1));
}

}  // namespace

Trajectory ode_solve(const VectorField& field, const Eigen::VectorXd& y0, double t_end, double rel_tol,
                     const OdeOptions& opts) {
    if (!(t_end > 0.0)) throw InvalidArgument("ode_solve: t_end must be positive");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-2)) throw InvalidArgument("ode_solve: rel_tol must lie in (0, 1e-2]");
    for (std::size_t i = 0; i < opts.output_times.size(); ++i) {
        const double to = opts.output_times[i];
        if (!(to > 0.0 && to <= t_end) || (i > 0 && to <= opts.output_times[i - 1]))
            throw InvalidArgument("ode_solve: output_times must increase within (0, t_end]");
    }
    const double atol = opts.abs_tol > 0 ? opts.abs_tol : 1e-3 * rel_tol;
    const double h_min = 1e-12 * t_end;
    const bool record_all = opts.output_times.empty();

    Trajectory tr;
    tr.t.push_back(0.0);
    tr.y.push_back(y0);

    const Eigen::Index n = y0.size();
    Eigen::VectorXd y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    double t = 0.0;
    field(t, y, k1);

    double h = opts.initial_step;
    if (h <= 0.0) {
        const double d0 = err_norm(y, y, y, atol, rel_tol);
        const double d1 = err_norm(k1, y, y, atol, rel_tol);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, t_end);
        ytmp = y + h * k1;
        field(t + h, ytmp, k2);
        const double d2 = err_norm(k2 - k1, y, y, atol, rel_tol) / h;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / dm, 0.2);
        h = std::min({100 * h, h1, t_end});
    }

    std::size_t next_out = 0;
    while (t < t_end) {
        if (tr.accepted_steps + tr.rejected_steps >= opts.max_steps)
            throw IntegrationFailure("ode_solve: step budget exhausted at t=" + std::to_string(t), tr);
        double target = t_end;
        if (!record_all && next_out < opts.output_times.size()) target = opts.output_times[next_out];
        bool lands = false;
        if (t + h >= target * (1.0 - 1e-14) || target - (t + h) < h_min) {
            h = target - t;
            lands = true;
        }
        if (h < h_min) {
            if (lands && h > 0.0) {
                // Residual gap smaller than the underflow threshold: take it as is.
            } else {
                throw IntegrationFailure("ode_solve: step size underflow at t=" + std::to_string(t), tr);
            }
        }

        ytmp = y + h * (a21 * k1);
        field(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        field(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        field(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        field(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        field(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        field(t + h, ynew, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = err_norm(err, y, ynew, atol, rel_tol);
        if (!std::isfinite(en)) {
            ++tr.rejected_steps;
            h *= 0.1;
            if (h < h_min) throw IntegrationFailure("ode_solve: non-finite state at t=" + std::to_string(t), tr);
            continue;
        }
        if (en <= 1.0) {
            t = lands ? target : t + h;
            y = ynew;
            k1 = k7;
            ++tr.accepted_steps;
            if (opts.on_step) opts.on_step(t, y, k1);
            const bool stop = opts.stop && opts.stop(t, y);
            if (record_all || stop || (lands && next_out < opts.output_times.size())) {
                tr.t.push_back(t);
                tr.y.push_back(y);
            }
            if (lands && !record_all) ++next_out;
            if (stop) {
                tr.stopped_by_event = true;
                break;
            }
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            ++tr.rejected_steps;
            h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
            if (h < h_min) throw IntegrationFailure("ode_solve: step size underflow at t=" + std::to_string(t), tr);
        }
    }
    if (tr.t.back() != t) {
        tr.t.push_back(t);
        tr.y.push_back(y);
    }
    return tr;
}

}  // namespace ntk
