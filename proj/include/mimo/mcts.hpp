#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "mimo/signal_model.hpp"

namespace mimo {

struct MctsNode {
  double symbol = 0.0;      // pam value at this node; unused at the root
  double d_bar = 0.0;       // running mean of backpropagated -d values
  long visits = 0;          // selection count
  double cum_metric = 0.0;  // d of the partial path ending at this node
  std::vector<std::unique_ptr<MctsNode>> children;  // empty or exactly |Q|

  bool is_leaf() const { return children.empty(); }
};

struct MctsConfig {
  double c_uct = 350.0;
  int playouts_initial = 200;
  double beta_p = 0.95;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// UCT child choice: unvisited children take priority (lowest index first);
// otherwise argmax of d_bar + c_uct * sqrt(ln V / v), ties to lowest index.
int select_uct(const MctsNode& node, double c_uct);

// One Selection -> Expansion -> Simulation -> Backpropagation cycle rooted
// at `root`, whose partial path (recovery order) is `prefix`. Returns the
// backpropagated value and the tree path it touched, for test inspection.
struct PlayoutRecord {
  double value = 0.0;
  std::vector<MctsNode*> path;
};
PlayoutRecord run_playout(MctsNode& root, const std::vector<double>& prefix,
                          const RealSystem& sys, double c_uct, Rng& rng);

// Full m-step MCTS detection with subtree reuse and playout decay.
Eigen::VectorXd detect_mcts(const RealSystem& sys, const MctsConfig& cfg);

// Playout budget at step l: max(1, floor(playouts_initial * beta_p^l)).
int playouts_at_step(int playouts_initial, double beta_p, int step);

}  // namespace mimo
