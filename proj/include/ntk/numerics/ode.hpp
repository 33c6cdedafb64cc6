#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ntk/errors.hpp"

namespace ntk {

using VectorField = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct Trajectory {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> y;
    bool stopped_by_event = false;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

struct OdeOptions {
    double abs_tol = -1.0;  // negative: 1e-3 * rel_tol
    double initial_step = 0.0;  // zero: automatic
    long max_steps = 10'000'000;
    // Strictly increasing times in (0, t_end] at which the state is recorded.
    // Steps are shortened to land on them exactly. Empty: record every accepted step.
    std::vector<double> output_times;
    // Called after every accepted step with the derivative at the new state.
    std::function<void(double, const Eigen::VectorXd&, const Eigen::VectorXd&)> on_step;
    // Integration halts after the first accepted step for which this returns true.
    std::function<bool(double, const Eigen::VectorXd&)> stop;
};

struct IntegrationFailure : StiffnessError {
    IntegrationFailure(const std::string& what, Trajectory partial_)
        : StiffnessError(what), partial(std::move(partial_)) {}
    Trajectory partial;
};

// Dormand-Prince 5(4) with standard PI-free step control.
Trajectory ode_solve(const VectorField& field, const Eigen::VectorXd& y0, double t_end, double rel_tol,
                     const OdeOptions& opts = {});

}  // namespace ntk
