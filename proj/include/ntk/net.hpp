#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ntk/activations.hpp"
#include "ntk/numerics/rng.hpp"

namespace ntk {

// widths holds n_0..n_L; the scalar output is f^{L+1}. m = n_{L-1}.
struct NetDims {
    int d = 2;
    std::vector<int> widths;

    int L() const { return static_cast<int>(widths.size()) - 1; }
    int m() const { return widths.at(widths.size() - 2); }
    void validate() const;  // throws InvalidArgument
    bool operator==(const NetDims&) const = default;
};

NetDims uniform_dims(int d, int L, int width, int n0 = -1);

struct NetworkParams {
    NetDims dims;
    Eigen::MatrixXd V;               // n_0 x d, orthonormal columns
    std::vector<Eigen::MatrixXd> W;  // W[l] is n_{l+1} x n_l, l = 0..L-1 (trained)
    Eigen::VectorXd w_out;           // n_L entries in {-1, +1}

    std::size_t trained_size() const;
    Eigen::VectorXd flatten() const;  // trained matrices, column-major, layer by layer
    void unflatten(const Eigen::VectorXd& theta);
};

NetworkParams init_params(const NetDims& dims, RngStream& rng);
NetworkParams init_params(const NetDims& dims, std::uint64_t seed);

struct ForwardRecord {
    std::vector<Eigen::VectorXd> pre;  // pre[l] = f^l for l = 1..L; pre[0] = V x
    double output = 0.0;
};

ForwardRecord forward(const NetworkParams& p, const Eigen::VectorXd& x, const Activation& act);

// Batched forward pass over the rows of X. pre[l] is n_l x N.
struct ForwardBatch {
    std::vector<Eigen::MatrixXd> pre;
    Eigen::RowVectorXd output;
};

ForwardBatch forward_batch(const NetworkParams& p, const Eigen::MatrixXd& X, const Activation& act);

enum class GramKind { sigma_hat, sigma_dot_hat, ntk_hat, ntk_limit };

struct GramMatrix {
    Eigen::MatrixXd points;
    Eigen::MatrixXd values;
    GramKind kind = GramKind::sigma_hat;
};

GramMatrix empirical_sigma(const NetworkParams& p, const Eigen::MatrixXd& X, int layer, const Activation& act);
GramMatrix empirical_sigma_dot(const NetworkParams& p, const Eigen::MatrixXd& X, int layer, const Activation& act);
// Sigma-dot-hat^L entrywise times Sigma-hat^{L-1}. Requires L >= 2.
GramMatrix empirical_ntk(const NetworkParams& p, const Eigen::MatrixXd& X, const Activation& act);

struct LossGrad {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> grads;  // same shapes as W
};

// Quadrature loss 0.5 * sum_q w_q (f(x_q) - y_q)^2 and its exact gradient in W^0..W^{L-1}.
LossGrad loss_and_grad(const NetworkParams& p, const Eigen::VectorXd& target, const Eigen::MatrixXd& X,
                       const std::vector<double>& weights, const Activation& act);

// max_l ||W^l_p - W^l_q||_2 / sqrt(n_l)
double weight_distance(const NetworkParams& p, const NetworkParams& q);

struct SnapshotMeta {
    std::uint64_t seed = 0;
    std::string activation;
};

// Layout: 8-byte magic "NTKSNAP1", little-endian u64 header length, UTF-8 JSON
// header, then little-endian f64 payload: V, W^0..W^{L-1} (row-major), w_out.
void save_snapshot(const std::filesystem::path& path, const NetworkParams& p, const SnapshotMeta& meta);
NetworkParams load_snapshot(const std::filesystem::path& path, SnapshotMeta* meta = nullptr);

}  // namespace ntk
