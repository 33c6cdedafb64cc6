#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ntk/activations.hpp"
#include "ntk/net.hpp"
#include "ntk/results.hpp"
#include "ntk/sphere.hpp"

namespace ntk {

struct FlowConfig {
    NetDims dims;
    Activation act;
    TargetSpec target;
    int grid_n = 64;          // uniform circle points (d = 2) or latitudes (d = 3)
    int harmonic_cutoff = -1; // negative: largest degree with grid_n > 4 * cutoff
    double alpha = 0.25;
    double t_end = 20.0;
    double rel_tol = 1e-7;
    int checkpoints = 24;     // log-spaced positive times, plus t = 0
    double first_checkpoint_fraction = 1e-3;
    std::uint64_t seed = 1;

    // Programmatic overrides, not part of the JSON schema.
    std::optional<Eigen::VectorXd> target_values;
    std::function<void(double, const Eigen::VectorXd&, const Eigen::VectorXd&)> on_step;

    void validate() const;
    int cutoff() const;
};

struct FlowTrace {
    std::vector<double> times, loss, norm_neg_alpha, norm_l2, norm_alpha, weight_distance;
    NetworkParams initial_params, final_params;
    Eigen::VectorXd target;
    SphereGrid grid;
    bool failed = false;
    std::string failure;
    long accepted_steps = 0;

    std::size_t size() const { return times.size(); }
    ResultTable table(const std::string& name = "trace") const;  // t, loss, norm_neg_alpha, norm_l2, norm_alpha, weight_distance
};

// Initial target on the grid; the named target "initial_network" returns f_{theta(0)}.
Eigen::VectorXd flow_target(const FlowConfig& cfg, const SphereGrid& grid, const NetworkParams& p0);
SphereGrid flow_grid(const FlowConfig& cfg);

FlowTrace run_flow(const FlowConfig& cfg);

struct EnvelopeParams {
    double alpha = 0.25, beta = 1.0, gamma = 0.5;
    double m = 256;
    int d = 2;
    double c = 1.0;             // constant in the c sqrt(d/m) branch of h
    double k_neg = 1.0;         // ||kappa(0)||_{H^{-alpha}}
    double k_pos = 1.0;         // ||kappa(0)||_{H^{alpha}}
    double c1 = 1.0, c2 = 1.0;  // fitted prefactor and rate

    void validate() const;  // throws InvalidArgument
};

struct HBranches {
    double width_branch = 0.0;  // [k_neg^{1/2} k_pos^{1/2} / sqrt m]^{(b-a)/(b(1+g)-a)}
    double floor_branch = 0.0;  // c sqrt(d/m)
    double h = 0.0;
};

HBranches envelope_h(const EnvelopeParams& p);

// Bound on ||kappa(t)||_{L2}^2:
// c1 [H k_pos^{b/a} + k_neg^{b/a} exp(-c2 H (b/2a) t)]^{a/b} k_pos, with H = h^{b g/(b-a)}.
double rate_envelope(const EnvelopeParams& p, double t);

struct EnvelopeFit {
    double c1 = 0.0, c2 = 0.0;
    double coverage = 1.0;
    bool skipped = false;
    std::size_t calibration_points = 0;
    HBranches h;
};

// Fits (c1, c2) on the first half of the checkpoints so that the envelope
// lies on or above every calibration point and the log residuals are as small
// as possible; coverage is measured over all checkpoints.
EnvelopeFit envelope_fit(const FlowTrace& trace, EnvelopeParams p);
EnvelopeFit envelope_fit(const std::vector<double>& times, const std::vector<double>& l2_squared, EnvelopeParams p);

struct OdeBoundParams {
    double a = 1, b = 1, c = 1, d = 1, rho = 1;
    double x0 = 1, y0 = 1;
    double t_end = 5.0;
    double rel_tol = 1e-9;
};

struct OdeBoundReport {
    std::vector<double> t, x, y;
    std::vector<double> bound_x_rho;    // A / (1 - B(t)), bounds x^rho
    std::vector<double> bound_x_closed; // (A + x0^rho e^{-b rho t})^{1/rho}; NaN where B(t) < 0
    double threshold = 0.0;             // (d/c)^{2/(2 rho - 1)} y0
    double horizon = 0.0;               // end of the interval on which x >= threshold
    bool condition_held_to_end = true;
    bool y_extinct = false;             // y reached zero before t_end; the horizon stops there
    bool satisfied = true;
    double worst_ratio = 0.0;           // max over checks of value / bound

    ResultTable table() const;
};

double ode_condition_threshold(const OdeBoundParams& p);
void validate_ode_bound_params(const OdeBoundParams& p);  // throws InvalidArgument naming the condition
OdeBoundReport ode_bound_check(const OdeBoundParams& p);

}  // namespace ntk
