#include "mimo/mcts.hpp"

#include <cmath>
#include <limits>

namespace mimo {

void MctsConfig::validate() const {
  if (c_uct < 0.0) throw InvalidParameterError("c_uct must be >= 0");
  if (playouts_initial < 1)
    throw InvalidParameterError("playouts_initial must be >= 1");
  if (beta_p <= 0.0 || beta_p >= 1.0)
    throw InvalidParameterError("beta_p must be in (0, 1)");
}

int select_uct(const MctsNode& node, double c_uct) {
  const auto& ch = node.children;
  for (std::size_t i = 0; i < ch.size(); ++i)
    if (ch[i]->visits == 0) return static_cast<int>(i);

  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  const double log_v = std::log(static_cast<double>(node.visits));
  for (std::size_t i = 0; i < ch.size(); ++i) {
    double score =
        ch[i]->d_bar + c_uct * std::sqrt(log_v / static_cast<double>(ch[i]->visits));
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

PlayoutRecord run_playout(MctsNode& root, const std::vector<double>& prefix,
                          const RealSystem& sys, double c_uct, Rng& rng) {
  const int m = sys.m();
  const auto& pam = sys.constellation.pam_levels;

  PlayoutRecord rec;
  rec.path.push_back(&root);
  std::vector<double> recovered = prefix;
  MctsNode* node = &root;

  // Selection
  while (!node->is_leaf()) {
    int idx = select_uct(*node, c_uct);
    node = node->children[idx].get();
    rec.path.push_back(node);
    recovered.push_back(node->symbol);
  }

  double value;
  if (static_cast<int>(recovered.size()) < m) {
    // Expansion: all |Q| children at once
    node->children.reserve(pam.size());
    for (double q : pam) {
      auto child = std::make_unique<MctsNode>();
      child->symbol = q;
      child->cum_metric = node->cum_metric + branch_metric(sys, recovered, q);
      node->children.push_back(std::move(child));
    }
    // Simulation: one fresh child at random, then random completion
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pam.size()) - 1);
    MctsNode* child = node->children[pick(rng)].get();
    rec.path.push_back(child);
    recovered.push_back(child->symbol);
    double d = child->cum_metric;
    while (static_cast<int>(recovered.size()) < m) {
      double q = pam[pick(rng)];
      d += branch_metric(sys, recovered, q);
      recovered.push_back(q);
    }
    value = -d;
  } else {
    // terminal leaf: exact metric, no simulation
    value = -node->cum_metric;
  }

  // Backpropagation: running mean + visit count along the touched path
  for (MctsNode* nd : rec.path) {
    nd->visits += 1;
    nd->d_bar += (value - nd->d_bar) / static_cast<double>(nd->visits);
  }
  rec.value = value;
  return rec;
}

int playouts_at_step(int playouts_initial, double beta_p, int step) {
  double p = std::floor(playouts_initial * std::pow(beta_p, step));
  return std::max(1, static_cast<int>(p));
}

Eigen::VectorXd detect_mcts(const RealSystem& sys, const MctsConfig& cfg) {
  cfg.validate();
  const int m = sys.m();
  Rng rng = make_rng(cfg.rng_seed, 0x6d637473ULL);

  auto root = std::make_unique<MctsNode>();
  std::vector<double> fixed;  // decided symbols, recovery order
  fixed.reserve(m);

  for (int l = 0; l < m; ++l) {
    const int budget = playouts_at_step(cfg.playouts_initial, cfg.beta_p, l);
    for (int p = 0; p < budget; ++p)
      run_playout(*root, fixed, sys, cfg.c_uct, rng);

    // best action: largest d_bar, ties to lowest index
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < root->children.size(); ++i) {
      if (root->children[i]->d_bar > best_val) {
        best_val = root->children[i]->d_bar;
        best = static_cast<int>(i);
      }
    }
    fixed.push_back(root->children[best]->symbol);
    // re-root: keep the chosen subtree's statistics, drop the siblings
    auto next = std::move(root->children[best]);
    root = std::move(next);
  }

  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x(m - 1 - j) = fixed[j];
  return x;
}

}  // namespace mimo
