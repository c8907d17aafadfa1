#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "mimo/drl_agent.hpp"
#include "mimo/neural_net.hpp"
#include "mimo/signal_model.hpp"

namespace mimo {

struct DrlNode {
  double symbol = 0.0;  // pam value; unused at the root
  double u_bar = 0.0;   // running mean of backpropagated values (scaled)
  double prior = 0.0;   // P, from the parent's policy output
  long select_count = 0;  // z
  double cum_metric = 0.0;
  Eigen::VectorXd cached_policy;  // this node's own p-hat, set at expansion
  std::vector<std::unique_ptr<DrlNode>> children;

  bool is_leaf() const { return children.empty(); }
};

struct DrlMctsConfig {
  double c_puct = 20.0;
  int playouts_initial = 20;
  double beta_p = 0.95;
  std::uint64_t rng_seed = 0;
  double reward_scale = 0.0;  // 0 -> default 1/(2n); must match training
  bool root_dirichlet_noise = false;  // off by default, matching the method
  double dirichlet_alpha = 0.3;
  double dirichlet_weight = 0.25;

  void validate() const;
};

// PUCT: argmax of u_bar + c_puct * P * sqrt(Z) / (1 + z); well-defined at
// z = 0; ties broken by lowest index.
int select_puct(const DrlNode& node, double c_puct);

// One Selection -> Expansion -> Backpropagation cycle; expansion evaluates
// the policy and state-value networks once, terminal leaves backpropagate
// the exact scaled -d instead. Returns network-evaluation count for tests.
struct DrlPlayoutRecord {
  double value = 0.0;
  int network_evaluations = 0;  // actor+state-value pairs (0 or 1)
  int expansions = 0;
  std::vector<DrlNode*> path;
};
DrlPlayoutRecord run_drl_playout(DrlNode& root, const std::vector<double>& prefix,
                                 const RealSystem& sys, const DrlNets& nets,
                                 double c_puct, double reward_scale);

// Full m-step DRL-MCTS detection: best action by largest selection count,
// subtree reuse, playout decay. With playouts_initial = 1 this reproduces
// the greedy policy-network detector exactly.
Eigen::VectorXd detect_drl_mcts(const RealSystem& sys, const DrlNets& nets,
                                const DrlMctsConfig& cfg);

// Detection plus expansion statistics, for runtime/complexity inspection.
struct DrlMctsStats {
  long expansions = 0;
  long network_evaluations = 0;
};
Eigen::VectorXd detect_drl_mcts(const RealSystem& sys, const DrlNets& nets,
                                const DrlMctsConfig& cfg, DrlMctsStats* stats);

}  // namespace mimo
