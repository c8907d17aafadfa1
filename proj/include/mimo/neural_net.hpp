#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mimo/common.hpp"

namespace mimo {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2, Softmax = 3 };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  Activation activation = Activation::Identity;
};

// Per-layer pre/post activations from a forward pass; consumed by backward.
struct ForwardCache {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;   // affine outputs
  std::vector<Eigen::VectorXd> post;  // activated outputs
};

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;

  void add_scaled(const Gradients& other, double scale);
  void scale(double s);
  bool all_finite() const;
};

struct Mlp {
  std::vector<DenseLayer> layers;
  double l2_coeff = 0.0;

  int input_dim() const { return static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weights.rows()); }
  std::size_t parameter_count() const;

  Gradients zero_gradients() const;
};

// Builds the Table-I stack: hidden widths (4m+n+2, 8*N_T x5), shared by all
// three networks; only input width, output width, and activations differ.
Mlp make_actor(int m, int n, int n_t, int q, double l2_coeff);
Mlp make_critic(int m, int n, int n_t, double l2_coeff);
Mlp make_state_value(int m, int n, int n_t, int q, double l2_coeff);

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input,
                        ForwardCache* cache = nullptr);

// Reverse-mode pass. output_grad is dL/d(output); when at_logits is true it
// is interpreted as dL/d(pre-activation) of the final layer, which is the
// numerically safe entry point for softmax heads (fused softmax + CE).
Gradients backward(const Mlp& net, const ForwardCache& cache,
                   const Eigen::VectorXd& output_grad, bool at_logits = false);

struct RmsPropState {
  std::vector<Eigen::MatrixXd> ms_weights;
  std::vector<Eigen::VectorXd> ms_biases;
  double learning_rate = 1e-4;
  double decay_rho = 0.9;
  double epsilon_stab = 1e-8;

  static RmsPropState for_net(const Mlp& net, double learning_rate);
};

// ms <- rho*ms + (1-rho)*g^2 ; p <- p - lr*g/sqrt(ms + eps), elementwise.
// Throws TrainingDivergenceError on non-finite gradients.
void rmsprop_step(RmsPropState& opt, Mlp& net, const Gradients& grads);

// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases, seeded.
void init_weights(Mlp& net, std::uint64_t seed);

// The three networks as one checkpointable unit.
struct DrlNets {
  Mlp actor;
  Mlp critic;
  Mlp state_value;
};

void save_checkpoint(const DrlNets& nets, const std::string& path);
DrlNets load_checkpoint(const std::string& path);

double l2_norm_squared(const Mlp& net);

}  // namespace mimo
