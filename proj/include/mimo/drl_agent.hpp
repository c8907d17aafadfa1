#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mimo/neural_net.hpp"
#include "mimo/signal_model.hpp"

namespace mimo {

// One self-play record (s_l, a_l, r_l, s_{l+1}) plus the episode's terminal
// return. Rewards are stored raw (unscaled); losses apply reward_scale.
struct Transition {
  Eigen::VectorXd state;
  int action = 0;  // index into the PAM alphabet
  double reward = 0.0;
  Eigen::VectorXd next_state;
  int step = 0;
  double episode_return = 0.0;  // D^j = -d(x_1^m), backfilled at episode end
};

struct TrainConfig {
  double gamma = 0.95;
  double c1 = 1e-4;  // critic l2
  double c2 = 1.0;   // actor entropy weight
  double c3 = 1e-4;  // actor l2
  double c4 = 1e-4;  // state-value l2
  double learning_rate = 1e-4;
  int workers = 1;
  int episodes_per_update = 48;
  int total_updates = 1000;
  double reward_scale = 0.0;  // 0 -> default 1/(2n), resolved per scenario
  double train_snr_min_db = 6.0;
  double train_snr_max_db = 16.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// The (4m+n+2)-element MDP state for the partial path (recovery order).
Eigen::VectorXd build_state(const RealSystem& sys,
                            std::span<const double> recovered);

// r + gamma^(m-l) q_{l+1} - q_l, with q_m defined as 0 at l = m-1.
double td_error(double reward, int step, double q_l, double q_next,
                double gamma, int m);

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

// All three losses normalize by the number of episodes in the batch
// (transitions with step == 0) and add their l2 term from cfg.
LossAndGrads critic_loss_and_grad(const std::vector<Transition>& batch,
                                  const DrlNets& nets, const TrainConfig& cfg,
                                  int m);
LossAndGrads actor_loss_and_grad(const std::vector<Transition>& batch,
                                 const DrlNets& nets, const TrainConfig& cfg,
                                 int m);
LossAndGrads state_value_loss_and_grad(const std::vector<Transition>& batch,
                                       const DrlNets& nets,
                                       const TrainConfig& cfg);

enum class ActionMode { Sample, Greedy };

int sample_action(const Eigen::VectorXd& policy, Rng& rng, ActionMode mode);

// Runs one detection episode with sampled actions; returns m transitions
// with episode_return backfilled.
std::vector<Transition> self_play_episode(const RealSystem& sys,
                                          const DrlNets& nets, Rng& rng);

// Greedy stepwise detection with the policy network alone (the "DRL"
// baseline detector).
Eigen::VectorXd detect_drl_greedy(const RealSystem& sys, const DrlNets& nets);

struct UpdateLog {
  int update = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double state_value_loss = 0.0;
  double mean_episode_return = 0.0;  // raw -d, unscaled
  double seconds = 0.0;
};

struct TrainScenario {
  int n_t = 4;
  int n_r = 4;
  Constellation constellation;
  double epsilon = 0.1;
  std::uint64_t channel_seed = 1;  // base channel shared with evaluation
};

struct TrainResult {
  DrlNets nets;
  std::vector<UpdateLog> log;
  bool diverged = false;
};

// Synchronous multi-worker self-play training of the global networks.
// Deterministic for a fixed (cfg, scenario) regardless of thread timing.
TrainResult train(const TrainConfig& cfg, const TrainScenario& scenario);

void write_training_log(const std::vector<UpdateLog>& log,
                        const std::string& path);

double default_reward_scale(int n);

}  // namespace mimo
