#include <algorithm>
#include <cmath>

#include "ntk/errors.hpp"
#include "ntk/flow.hpp"
#include "ntk/numerics/ode.hpp"

namespace ntk {

void FlowConfig::validate() const {
    dims.validate();
    if (dims.d != 2 && dims.d != 3) throw InvalidArgument("flow: d must be 2 or 3");
    if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("flow: alpha must lie in (0, 1/2)");
    if (!(t_end > 0.0)) throw InvalidArgument("flow: t_end must be positive");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-2)) throw InvalidArgument("flow: rel_tol must lie in (0, 1e-2]");
    if (checkpoints < 1) throw InvalidArgument("flow: need at least one checkpoint");
    if (!(first_checkpoint_fraction > 0.0 && first_checkpoint_fraction <= 1.0))
        throw InvalidArgument("flow: first_checkpoint_fraction must lie in (0, 1]");
    if (grid_n < 4) throw InvalidArgument("flow: grid_n must be >= 4");
    const int cut = cutoff();
    if (cut < 1) throw InvalidArgument("flow: harmonic cutoff must be >= 1");
    if (grid_n <= 4 * cut) throw InvalidArgument("flow: grid_n must exceed 4 * harmonic_cutoff");
    if (dims.d == 3 && cut > kMaxDegreeD3) throw InvalidArgument("flow: d = 3 harmonic cutoff capped at 32");
}

int FlowConfig::cutoff() const {
    if (harmonic_cutoff >= 0) return harmonic_cutoff;
    const int c = (grid_n - 1) / 4;
    return dims.d == 3 ? std::min(c, kMaxDegreeD3) : c;
}

SphereGrid flow_grid(const FlowConfig& cfg) {
    return cfg.dims.d == 2 ? make_grid(2, cfg.grid_n, GridKind::uniform_circle)
                           : make_grid(3, cfg.grid_n, GridKind::gauss_sphere_d3);
}

Eigen::VectorXd flow_target(const FlowConfig& cfg, const SphereGrid& grid, const NetworkParams& p0) {
    if (cfg.target_values) {
        if (cfg.target_values->size() != grid.size()) throw InvalidArgument("flow: target override has wrong length");
        return *cfg.target_values;
    }
    if (cfg.target.kind == TargetKind::named && cfg.target.description == "initial_network")
        return forward_batch(p0, grid.points, cfg.act).output.transpose();
    return make_target(cfg.target, grid, cfg.cutoff()).values;
}

ResultTable FlowTrace::table(const std::string& name) const {
    ResultTable t(name, {{"t", ColumnType::real},
                            {"loss", ColumnType::real},
                            {"norm_neg_alpha", ColumnType::real},
                            {"norm_l2", ColumnType::real},
                            {"norm_alpha", ColumnType::real},
                            {"weight_distance", ColumnType::real}});
    for (std::size_t i = 0; i < times.size(); ++i)
        t.add_row({times[i], loss[i], norm_neg_alpha[i], norm_l2[i], norm_alpha[i], weight_distance[i]});
    return t;
}

FlowTrace run_flow(const FlowConfig& cfg) {
    cfg.validate();
    FlowTrace tr;
    tr.grid = flow_grid(cfg);
    tr.initial_params = init_params(cfg.dims, cfg.seed);
    tr.target = flow_target(cfg, tr.grid, tr.initial_params);
    const int cut = cfg.cutoff();

    NetworkParams scratch = tr.initial_params;
    auto field = [&](double, const Eigen::VectorXd& theta, Eigen::VectorXd& dtheta) {
        scratch.unflatten(theta);
        const auto lg = loss_and_grad(scratch, tr.target, tr.grid.points, tr.grid.weights, cfg.act);
        dtheta.resize(theta.size());
        Eigen::Index off = 0;
        for (const auto& g : lg.grads) {
            dtheta.segment(off, g.size()) = -Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
            off += g.size();
        }
    };

    OdeOptions opts;
    const double t0 = cfg.t_end * cfg.first_checkpoint_fraction;
    for (int k = 0; k < cfg.checkpoints; ++k) {
        const double frac = cfg.checkpoints == 1 ? 1.0 : static_cast<double>(k) / (cfg.checkpoints - 1);
        const double t = k + 1 == cfg.checkpoints ? cfg.t_end : t0 * std::pow(cfg.t_end / t0, frac);
        if (opts.output_times.empty() || t > opts.output_times.back()) opts.output_times.push_back(t);
    }
    opts.on_step = cfg.on_step;

    Trajectory traj;
    try {
        traj = ode_solve(field, tr.initial_params.flatten(), cfg.t_end, cfg.rel_tol, opts);
    } catch (const IntegrationFailure& e) {
        traj = e.partial;
        tr.failed = true;
        tr.failure = e.what();
    }
    tr.accepted_steps = traj.accepted_steps;

    NetworkParams cur = tr.initial_params;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        cur.unflatten(traj.y[i]);
        const Eigen::VectorXd out = forward_batch(cur, tr.grid.points, cfg.act).output.transpose();
        const Eigen::VectorXd kappa = out - tr.target;
        double loss = 0.0;
        for (int q = 0; q < tr.grid.size(); ++q) loss += 0.5 * tr.grid.weights[q] * kappa(q) * kappa(q);
        const auto coeffs = analyze(kappa, tr.grid, cut);
        tr.times.push_back(traj.t[i]);
        tr.loss.push_back(loss);
        tr.norm_neg_alpha.push_back(sobolev_norm(coeffs, -cfg.alpha));
        tr.norm_l2.push_back(sobolev_norm(coeffs, 0.0));
        tr.norm_alpha.push_back(sobolev_norm(coeffs, cfg.alpha));
        tr.weight_distance.push_back(weight_distance(cur, tr.initial_params));
    }
    tr.final_params = cur;
    return tr;
}

}  // namespace ntk
