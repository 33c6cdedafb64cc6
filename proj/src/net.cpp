#include "ntk/net.hpp"

#include <cmath>

#include "ntk/errors.hpp"
#include "ntk/numerics/linalg.hpp"

namespace ntk {

namespace {

Eigen::MatrixXd apply(const Eigen::MatrixXd& f, const Activation& act) {
    return f.unaryExpr([&](double x) { return act.value(x); });
}

Eigen::MatrixXd apply_deriv(const Eigen::MatrixXd& f, const Activation& act) {
    return f.unaryExpr([&](double x) { return act.deriv(x); });
}

void check_points(const NetworkParams& p, const Eigen::MatrixXd& X) {
    if (X.cols() != p.dims.d) throw InvalidArgument("points have dimension " + std::to_string(X.cols()) +
                                                    ", network expects " + std::to_string(p.dims.d));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (std::abs(X.row(i).norm() - 1.0) > 1e-9) throw InvalidArgument("input point is not on the unit sphere");
}

}  // namespace

void NetDims::validate() const {
    if (d < 1) throw InvalidArgument("NetDims: d must be >= 1");
    if (widths.size() < 2) throw InvalidArgument("NetDims: need widths n_0..n_L with L >= 1");
    for (int w : widths)
        if (w < 1) throw InvalidArgument("NetDims: widths must be >= 1");
    if (d > widths[0]) throw InvalidArgument("NetDims: d must not exceed n_0");
}

NetDims uniform_dims(int d, int L, int width, int n0) {
    NetDims dims;
    dims.d = d;
    dims.widths.assign(L + 1, width);
    if (n0 > 0) dims.widths[0] = n0;
    return dims;
}

std::size_t NetworkParams::trained_size() const {
    std::size_t s = 0;
    for (const auto& w : W) s += static_cast<std::size_t>(w.size());
    return s;
}

Eigen::VectorXd NetworkParams::flatten() const {
    Eigen::VectorXd theta(trained_size());
    Eigen::Index off = 0;
    for (const auto& w : W) {
        theta.segment(off, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        off += w.size();
    }
    return theta;
}

void NetworkParams::unflatten(const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(theta.size()) != trained_size())
        throw InvalidArgument("unflatten: parameter vector has the wrong length");
    Eigen::Index off = 0;
    for (auto& w : W) {
        Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = theta.segment(off, w.size());
        off += w.size();
    }
}

NetworkParams init_params(const NetDims& dims, RngStream& rng) {
    dims.validate();
    NetworkParams p;
    p.dims = dims;
    const int n0 = dims.widths[0];
    Eigen::MatrixXd G(n0, dims.d);
    for (Eigen::Index j = 0; j < G.cols(); ++j)
        for (Eigen::Index i = 0; i < G.rows(); ++i) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n0, dims.d);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(dims.d).triangularView<Eigen::Upper>();
    for (int j = 0; j < dims.d; ++j)
        if (R(j, j) < 0) Q.col(j) *= -1.0;
    p.V = Q;
    const int L = dims.L();
    p.W.resize(L);
    for (int l = 0; l < L; ++l) {
        p.W[l].resize(dims.widths[l + 1], dims.widths[l]);
        for (Eigen::Index j = 0; j < p.W[l].cols(); ++j)
            for (Eigen::Index i = 0; i < p.W[l].rows(); ++i) p.W[l](i, j) = rng.normal();
    }
    p.w_out.resize(dims.widths[L]);
    for (Eigen::Index i = 0; i < p.w_out.size(); ++i) p.w_out(i) = rng.rademacher();
    return p;
}

NetworkParams init_params(const NetDims& dims, std::uint64_t seed) {
    RngStream rng(seed, 0);
    return init_params(dims, rng);
}

ForwardBatch forward_batch(const NetworkParams& p, const Eigen::MatrixXd& X, const Activation& act) {
    check_points(p, X);
    const int L = p.dims.L();
    ForwardBatch fb;
    fb.pre.resize(L + 1);
    fb.pre[0] = p.V * X.transpose();
    fb.pre[1] = p.W[0] * fb.pre[0];
    for (int l = 1; l < L; ++l)
        fb.pre[l + 1] = p.W[l] * apply(fb.pre[l], act) / std::sqrt(static_cast<double>(p.dims.widths[l]));
    fb.output = p.w_out.transpose() * apply(fb.pre[L], act) / std::sqrt(static_cast<double>(p.dims.widths[L]));
    return fb;
}

ForwardRecord forward(const NetworkParams& p, const Eigen::VectorXd& x, const Activation& act) {
    const auto fb = forward_batch(p, x.transpose(), act);
    ForwardRecord r;
    for (const auto& m : fb.pre) r.pre.push_back(m.col(0));
    r.output = fb.output(0);
    return r;
}

GramMatrix empirical_sigma(const NetworkParams& p, const Eigen::MatrixXd& X, int layer, const Activation& act) {
    if (layer < 1 || layer > p.dims.L()) throw InvalidArgument("empirical_sigma: layer out of range");
    const auto fb = forward_batch(p, X, act);
    const Eigen::MatrixXd A = apply(fb.pre[layer], act);
    GramMatrix g;
    g.points = X;
    g.values = A.transpose() * A / static_cast<double>(p.dims.widths[layer]);
    g.kind = GramKind::sigma_hat;
    return g;
}

GramMatrix empirical_sigma_dot(const NetworkParams& p, const Eigen::MatrixXd& X, int layer, const Activation& act) {
    if (layer < 1 || layer > p.dims.L()) throw InvalidArgument("empirical_sigma_dot: layer out of range");
    const auto fb = forward_batch(p, X, act);
    const Eigen::MatrixXd A = apply_deriv(fb.pre[layer], act);
    GramMatrix g;
    g.points = X;
    g.values = A.transpose() * A / static_cast<double>(p.dims.widths[layer]);
    g.kind = GramKind::sigma_dot_hat;
    return g;
}

GramMatrix empirical_ntk(const NetworkParams& p, const Eigen::MatrixXd& X, const Activation& act) {
    const int L = p.dims.L();
    if (L < 2) throw InvalidArgument("empirical_ntk: depth L must be >= 2");
    const auto fb = forward_batch(p, X, act);
    const Eigen::MatrixXd A = apply(fb.pre[L - 1], act);
    const Eigen::MatrixXd D = apply_deriv(fb.pre[L], act);
    GramMatrix g;
    g.points = X;
    g.values = (D.transpose() * D / static_cast<double>(p.dims.widths[L]))
                   .cwiseProduct(A.transpose() * A / static_cast<double>(p.dims.widths[L - 1]));
    g.kind = GramKind::ntk_hat;
    return g;
}

LossGrad loss_and_grad(const NetworkParams& p, const Eigen::VectorXd& target, const Eigen::MatrixXd& X,
                       const std::vector<double>& weights, const Activation& act) {
    const Eigen::Index N = X.rows();
    if (target.size() != N || static_cast<Eigen::Index>(weights.size()) != N)
        throw InvalidArgument("loss_and_grad: grid, weights and target lengths differ");
    const int L = p.dims.L();
    const auto fb = forward_batch(p, X, act);
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), N);
    const Eigen::VectorXd resid = fb.output.transpose() - target;
    LossGrad out;
    out.loss = 0.5 * (w.array() * resid.array().square()).sum();
    const Eigen::RowVectorXd r = resid.cwiseProduct(w).transpose();

    out.grads.resize(L);
    // delta holds dLoss/df^l for every grid point (n_l x N).
    Eigen::MatrixXd delta = (p.w_out * r).cwiseProduct(apply_deriv(fb.pre[L], act)) /
                            std::sqrt(static_cast<double>(p.dims.widths[L]));
    for (int l = L - 1; l >= 1; --l) {
        const double s = 1.0 / std::sqrt(static_cast<double>(p.dims.widths[l]));
        const Eigen::MatrixXd A = apply(fb.pre[l], act);
        out.grads[l] = delta * A.transpose() * s;
        delta = (p.W[l].transpose() * delta * s).cwiseProduct(apply_deriv(fb.pre[l], act));
    }
    out.grads[0] = delta * fb.pre[0].transpose();
    return out;
}

double weight_distance(const NetworkParams& p, const NetworkParams& q) {
    if (!(p.dims == q.dims)) throw InvalidArgument("weight_distance: dimension mismatch");
    double best = 0.0;
    for (std::size_t l = 0; l < p.W.size(); ++l)
        best = std::max(best, spectral_norm(p.W[l] - q.W[l]) / std::sqrt(static_cast<double>(p.dims.widths[l])));
    return best;
}

}  // namespace ntk
