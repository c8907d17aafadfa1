#include "mimo/drl_mcts.hpp"

#include <cmath>
#include <limits>

#include "mimo/mcts.hpp"  // playouts_at_step

namespace mimo {

void DrlMctsConfig::validate() const {
  if (c_puct < 0.0) throw InvalidParameterError("c_puct must be >= 0");
  if (playouts_initial < 1)
    throw InvalidParameterError("playouts_initial must be >= 1");
  if (beta_p <= 0.0 || beta_p >= 1.0)
    throw InvalidParameterError("beta_p must be in (0, 1)");
}

int select_puct(const DrlNode& node, double c_puct) {
  const double sqrt_z = std::sqrt(static_cast<double>(node.select_count));
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const DrlNode& ch = *node.children[i];
    const double score =
        ch.u_bar + c_puct * ch.prior * sqrt_z /
                       (1.0 + static_cast<double>(ch.select_count));
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

DrlPlayoutRecord run_drl_playout(DrlNode& root, const std::vector<double>& prefix,
                                 const RealSystem& sys, const DrlNets& nets,
                                 double c_puct, double reward_scale) {
  const int m = sys.m();
  const auto& pam = sys.constellation.pam_levels;

  DrlPlayoutRecord rec;
  rec.path.push_back(&root);
  std::vector<double> recovered = prefix;
  DrlNode* node = &root;

  while (!node->is_leaf()) {
    int idx = select_puct(*node, c_puct);
    node = node->children[idx].get();
    rec.path.push_back(node);
    recovered.push_back(node->symbol);
  }

  double value;
  if (static_cast<int>(recovered.size()) < m) {
    // Expansion: one policy and one state-value evaluation
    Eigen::VectorXd s = build_state(sys, recovered);
    node->cached_policy = forward(nets.actor, s);
    Eigen::VectorXd sv_input(s.size() + node->cached_policy.size());
    sv_input << s, node->cached_policy;
    value = forward(nets.state_value, sv_input)(0);
    rec.network_evaluations = 1;
    rec.expansions = 1;

    node->children.reserve(pam.size());
    for (std::size_t k = 0; k < pam.size(); ++k) {
      auto child = std::make_unique<DrlNode>();
      child->symbol = pam[k];
      child->prior = node->cached_policy(static_cast<Eigen::Index>(k));
      child->cum_metric =
          node->cum_metric + branch_metric(sys, recovered, pam[k]);
      node->children.push_back(std::move(child));
    }
  } else {
    // terminal: exact metric, same scale as the trained value head
    value = -node->cum_metric * reward_scale;
  }

  for (DrlNode* nd : rec.path) {
    nd->select_count += 1;
    nd->u_bar += (value - nd->u_bar) / static_cast<double>(nd->select_count);
  }
  rec.value = value;
  return rec;
}

Eigen::VectorXd detect_drl_mcts(const RealSystem& sys, const DrlNets& nets,
                                const DrlMctsConfig& cfg) {
  return detect_drl_mcts(sys, nets, cfg, nullptr);
}

Eigen::VectorXd detect_drl_mcts(const RealSystem& sys, const DrlNets& nets,
                                const DrlMctsConfig& cfg, DrlMctsStats* stats) {
  cfg.validate();
  if (nets.actor.layers.empty()) throw ConfigError("missing trained networks");
  const int m = sys.m();
  const double scale = cfg.reward_scale > 0.0 ? cfg.reward_scale
                                              : default_reward_scale(sys.n());
  Rng rng = make_rng(cfg.rng_seed, 0x64726cULL);

  auto root = std::make_unique<DrlNode>();
  std::vector<double> fixed;
  fixed.reserve(m);

  for (int l = 0; l < m; ++l) {
    // A fresh root is expanded outside the playout budget so the budgeted
    // playouts always traverse at least one edge from the root.
    if (root->is_leaf()) {
      auto r = run_drl_playout(*root, fixed, sys, nets, cfg.c_puct, scale);
      if (stats) {
        stats->expansions += r.expansions;
        stats->network_evaluations += r.network_evaluations;
      }
    }
    if (cfg.root_dirichlet_noise && l == 0) {
      std::gamma_distribution<double> gamma(cfg.dirichlet_alpha, 1.0);
      std::vector<double> noise(root->children.size());
      double total = 0.0;
      for (auto& v : noise) total += (v = gamma(rng));
      for (std::size_t i = 0; i < root->children.size(); ++i)
        root->children[i]->prior =
            (1.0 - cfg.dirichlet_weight) * root->children[i]->prior +
            cfg.dirichlet_weight * noise[i] / total;
    }

    const int budget = playouts_at_step(cfg.playouts_initial, cfg.beta_p, l);
    for (int p = 0; p < budget; ++p) {
      auto r = run_drl_playout(*root, fixed, sys, nets, cfg.c_puct, scale);
      if (stats) {
        stats->expansions += r.expansions;
        stats->network_evaluations += r.network_evaluations;
      }
    }

    // best action: largest z; ties by larger u_bar, then lowest index
    int best = 0;
    for (std::size_t i = 1; i < root->children.size(); ++i) {
      const DrlNode& a = *root->children[i];
      const DrlNode& b = *root->children[best];
      if (a.select_count > b.select_count ||
          (a.select_count == b.select_count && a.u_bar > b.u_bar))
        best = static_cast<int>(i);
    }
    fixed.push_back(root->children[best]->symbol);
    auto next = std::move(root->children[best]);
    root = std::move(next);
  }

  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x(m - 1 - j) = fixed[j];
  return x;
}

}  // namespace mimo
