#include "mimo/drl_agent.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

namespace mimo {

namespace {

constexpr double kLogClamp = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kLogClamp)); }

int count_episodes(const std::vector<Transition>& batch) {
  int n = 0;
  for (const auto& t : batch)
    if (t.step == 0) ++n;
  if (n == 0) throw InvalidParameterError("batch contains no episode starts");
  return n;
}

double require_scale(const TrainConfig& cfg) {
  if (cfg.reward_scale <= 0.0)
    throw InvalidParameterError("reward_scale must be resolved before use");
  return cfg.reward_scale;
}

}  // namespace

void TrainConfig::validate() const {
  if (gamma < 0.9 || gamma > 1.0)
    throw InvalidParameterError("gamma must be in [0.9, 1]");
  if (workers < 1) throw InvalidParameterError("workers must be >= 1");
  if (episodes_per_update < 1)
    throw InvalidParameterError("episodes_per_update must be >= 1");
  if (total_updates < 1) throw InvalidParameterError("total_updates must be >= 1");
  if (learning_rate <= 0.0) throw InvalidParameterError("learning_rate must be > 0");
}

double default_reward_scale(int n) { return 1.0 / (2.0 * n); }

Eigen::VectorXd build_state(const RealSystem& sys,
                            std::span<const double> recovered) {
  const int m = sys.m();
  const int n = sys.n();
  const int l = static_cast<int>(recovered.size());
  if (l > m) throw InvalidParameterError("partial path longer than m");

  Eigen::VectorXd s = Eigen::VectorXd::Zero(4 * m + n + 2);
  s.segment(0, m) = sys.y;
  s.segment(m, n) = sys.y_prime;
  s.segment(m + n, m) = sys.H.transpose() * sys.y_prime;

  // chi blocks: natural index order, leading zeros for undecided symbols
  for (int j = 0; j < l; ++j) s(2 * m + n + (m - 1 - j)) = recovered[j];
  for (int j = 0; j + 1 < l; ++j) s(3 * m + n + (m - 1 - j)) = recovered[j];

  if (l > 0) {
    const double d = path_metric(sys, recovered);
    const double d_prev = path_metric(sys, recovered.subspan(0, l - 1));
    s(4 * m + n) = d - d_prev;  // b(x_{m-l+1}^m)
    s(4 * m + n + 1) = d;
  }
  return s;
}

double td_error(double reward, int step, double q_l, double q_next,
                double gamma, int m) {
  if (step < 0 || step >= m) throw InvalidParameterError("td_error: bad step");
  const double bootstrap = (step == m - 1) ? 0.0 : q_next;
  return reward + std::pow(gamma, m - step) * bootstrap - q_l;
}

LossAndGrads critic_loss_and_grad(const std::vector<Transition>& batch,
                                  const DrlNets& nets, const TrainConfig& cfg,
                                  int m) {
  const double scale = require_scale(cfg);
  const int n_episodes = count_episodes(batch);
  LossAndGrads out;
  out.grads = nets.critic.zero_gradients();

  double loss = 0.0;
  ForwardCache cache;
  for (const auto& t : batch) {
    const double q_l = forward(nets.critic, t.state, &cache)(0);
    const double q_next =
        (t.step == m - 1) ? 0.0 : forward(nets.critic, t.next_state)(0);
    const double td = td_error(t.reward * scale, t.step, q_l, q_next,
                               cfg.gamma, m);
    loss += td * td;
    // bootstrap target held constant: gradient flows only through q_l
    Eigen::VectorXd g(1);
    g(0) = -2.0 * td / n_episodes;
    out.grads.add_scaled(backward(nets.critic, cache, g), 1.0);
  }
  out.loss = loss / n_episodes + cfg.c1 * l2_norm_squared(nets.critic);
  for (std::size_t i = 0; i < nets.critic.layers.size(); ++i) {
    out.grads.d_weights[i] += 2.0 * cfg.c1 * nets.critic.layers[i].weights;
    out.grads.d_biases[i] += 2.0 * cfg.c1 * nets.critic.layers[i].biases;
  }
  if (!std::isfinite(out.loss))
    throw TrainingDivergenceError("critic loss not finite");
  return out;
}

LossAndGrads actor_loss_and_grad(const std::vector<Transition>& batch,
                                 const DrlNets& nets, const TrainConfig& cfg,
                                 int m) {
  const double scale = require_scale(cfg);
  const int n_episodes = count_episodes(batch);
  LossAndGrads out;
  out.grads = nets.actor.zero_gradients();

  double loss = 0.0;
  ForwardCache cache;
  for (const auto& t : batch) {
    Eigen::VectorXd p_hat = forward(nets.actor, t.state, &cache);

    const double q_l = forward(nets.critic, t.state)(0);
    const double q_next =
        (t.step == m - 1) ? 0.0 : forward(nets.critic, t.next_state)(0);
    const double td = td_error(t.reward * scale, t.step, q_l, q_next,
                               cfg.gamma, m);  // constant coefficient

    const double ce = -safe_log(p_hat(t.action));
    double entropy = 0.0;
    for (Eigen::Index k = 0; k < p_hat.size(); ++k)
      entropy -= p_hat(k) * safe_log(p_hat(k));
    loss += td * ce - cfg.c2 * entropy;

    // gradient at the logits: fused softmax-CE term plus the entropy term
    Eigen::VectorXd g = td * p_hat;
    g(t.action) -= td;
    for (Eigen::Index k = 0; k < p_hat.size(); ++k)
      g(k) += cfg.c2 * p_hat(k) * (safe_log(p_hat(k)) + entropy);
    g /= n_episodes;
    out.grads.add_scaled(backward(nets.actor, cache, g, /*at_logits=*/true), 1.0);
  }
  out.loss = loss / n_episodes + cfg.c3 * l2_norm_squared(nets.actor);
  for (std::size_t i = 0; i < nets.actor.layers.size(); ++i) {
    out.grads.d_weights[i] += 2.0 * cfg.c3 * nets.actor.layers[i].weights;
    out.grads.d_biases[i] += 2.0 * cfg.c3 * nets.actor.layers[i].biases;
  }
  if (!std::isfinite(out.loss))
    throw TrainingDivergenceError("actor loss not finite");
  return out;
}

LossAndGrads state_value_loss_and_grad(const std::vector<Transition>& batch,
                                       const DrlNets& nets,
                                       const TrainConfig& cfg) {
  const double scale = require_scale(cfg);
  const int n_episodes = count_episodes(batch);
  LossAndGrads out;
  out.grads = nets.state_value.zero_gradients();

  double loss = 0.0;
  ForwardCache cache;
  for (const auto& t : batch) {
    Eigen::VectorXd p_hat = forward(nets.actor, t.state);  // constant input
    Eigen::VectorXd input(t.state.size() + p_hat.size());
    input << t.state, p_hat;
    const double u = forward(nets.state_value, input, &cache)(0);
    const double target = t.episode_return * scale;
    loss += (u - target) * (u - target);
    Eigen::VectorXd g(1);
    g(0) = 2.0 * (u - target) / n_episodes;
    out.grads.add_scaled(backward(nets.state_value, cache, g), 1.0);
  }
  out.loss = loss / n_episodes + cfg.c4 * l2_norm_squared(nets.state_value);
  for (std::size_t i = 0; i < nets.state_value.layers.size(); ++i) {
    out.grads.d_weights[i] += 2.0 * cfg.c4 * nets.state_value.layers[i].weights;
    out.grads.d_biases[i] += 2.0 * cfg.c4 * nets.state_value.layers[i].biases;
  }
  if (!std::isfinite(out.loss))
    throw TrainingDivergenceError("state value loss not finite");
  return out;
}

int sample_action(const Eigen::VectorXd& policy, Rng& rng, ActionMode mode) {
  const double total = policy.sum();
  if (std::abs(total - 1.0) > 1e-6)
    throw InvalidParameterError("policy does not sum to 1");

  if (mode == ActionMode::Greedy) {
    int best = 0;
    for (Eigen::Index k = 1; k < policy.size(); ++k)
      if (policy(k) > policy(best)) best = static_cast<int>(k);
    return best;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng) * total;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < policy.size(); ++k) {
    acc += policy(k);
    if (r < acc) return static_cast<int>(k);
  }
  return static_cast<int>(policy.size() - 1);
}

std::vector<Transition> self_play_episode(const RealSystem& sys,
                                          const DrlNets& nets, Rng& rng) {
  const int m = sys.m();
  const auto& pam = sys.constellation.pam_levels;
  std::vector<Transition> episode;
  episode.reserve(m);

  std::vector<double> recovered;
  recovered.reserve(m);
  double d = 0.0;
  for (int l = 0; l < m; ++l) {
    Transition t;
    t.step = l;
    t.state = build_state(sys, recovered);
    Eigen::VectorXd p_hat = forward(nets.actor, t.state);
    t.action = sample_action(p_hat, rng, ActionMode::Sample);
    d += branch_metric(sys, recovered, pam[t.action]);
    recovered.push_back(pam[t.action]);
    t.reward = -d;
    t.next_state = build_state(sys, recovered);
    episode.push_back(std::move(t));
  }
  for (auto& t : episode) t.episode_return = -d;
  return episode;
}

Eigen::VectorXd detect_drl_greedy(const RealSystem& sys, const DrlNets& nets) {
  const int m = sys.m();
  const auto& pam = sys.constellation.pam_levels;
  std::vector<double> recovered;
  recovered.reserve(m);
  Rng dummy(0);  // greedy mode draws nothing
  for (int l = 0; l < m; ++l) {
    Eigen::VectorXd s = build_state(sys, recovered);
    Eigen::VectorXd p_hat = forward(nets.actor, s);
    recovered.push_back(pam[sample_action(p_hat, dummy, ActionMode::Greedy)]);
  }
  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x(m - 1 - j) = recovered[j];
  return x;
}

namespace {

struct WorkerOutput {
  LossAndGrads critic, actor, state_value;
  double sum_return = 0.0;
  int episodes = 0;
};

void run_worker(const TrainConfig& cfg, const TrainScenario& scenario,
                const ComplexChannelInstance& base, const DrlNets& nets, int m,
                int worker_idx, int update_idx, int n_episodes,
                WorkerOutput& out) {
  Rng rng = make_rng(cfg.seed, 0x776f726bULL, worker_idx, update_idx);
  std::uniform_real_distribution<double> snr(cfg.train_snr_min_db,
                                             cfg.train_snr_max_db);
  std::vector<Transition> batch;
  batch.reserve(static_cast<std::size_t>(n_episodes) * m);
  for (int e = 0; e < n_episodes; ++e) {
    const std::uint64_t j =
        derive_seed(0x747261696eULL, worker_idx, update_idx, e);
    RealSystem sys;
    for (int attempt = 0;; ++attempt) {
      try {
        sys = make_instance(base, scenario.constellation, snr(rng),
                            j + attempt, rng);
        break;
      } catch (const DegenerateChannelError&) {
        if (attempt >= 16) throw;
      }
    }
    auto episode = self_play_episode(sys, nets, rng);
    out.sum_return += episode.back().episode_return;
    for (auto& t : episode) batch.push_back(std::move(t));
  }
  out.episodes = n_episodes;
  out.critic = critic_loss_and_grad(batch, nets, cfg, m);
  out.actor = actor_loss_and_grad(batch, nets, cfg, m);
  out.state_value = state_value_loss_and_grad(batch, nets, cfg);
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in, const TrainScenario& scenario) {
  TrainConfig cfg = cfg_in;
  cfg.validate();

  const bool real = scenario.constellation.real_valued;
  const int m = real ? scenario.n_t : 2 * scenario.n_t;
  const int n = real ? scenario.n_r : 2 * scenario.n_r;
  const int q = scenario.constellation.order();
  if (cfg.reward_scale <= 0.0) cfg.reward_scale = default_reward_scale(n);

  TrainResult result;
  result.nets.actor = make_actor(m, n, scenario.n_t, q, cfg.c3);
  result.nets.critic = make_critic(m, n, scenario.n_t, cfg.c1);
  result.nets.state_value = make_state_value(m, n, scenario.n_t, q, cfg.c4);
  init_weights(result.nets.actor, derive_seed(cfg.seed, 1));
  init_weights(result.nets.critic, derive_seed(cfg.seed, 2));
  init_weights(result.nets.state_value, derive_seed(cfg.seed, 3));

  RmsPropState opt_a = RmsPropState::for_net(result.nets.actor, cfg.learning_rate);
  RmsPropState opt_c = RmsPropState::for_net(result.nets.critic, cfg.learning_rate);
  RmsPropState opt_s =
      RmsPropState::for_net(result.nets.state_value, cfg.learning_rate);

  ComplexChannelInstance base = make_base_channel(
      scenario.n_r, scenario.n_t, scenario.epsilon, scenario.channel_seed, real);

  const int workers = cfg.workers;
  result.log.reserve(cfg.total_updates);

  for (int u = 0; u < cfg.total_updates; ++u) {
    const auto t0 = std::chrono::steady_clock::now();
    DrlNets snapshot = result.nets;  // last good parameters

    std::vector<WorkerOutput> outputs(workers);
    std::vector<std::thread> threads;
    int assigned = 0;
    for (int w = 0; w < workers; ++w) {
      int count = cfg.episodes_per_update / workers +
                  (w < cfg.episodes_per_update % workers ? 1 : 0);
      if (count == 0) continue;
      assigned += count;
      threads.emplace_back(run_worker, std::cref(cfg), std::cref(scenario),
                           std::cref(base), std::cref(result.nets), m, w, u,
                           count, std::ref(outputs[w]));
    }
    for (auto& t : threads) t.join();
    (void)assigned;

    // combine: weight each worker by its share of the episode batch
    Gradients g_a = result.nets.actor.zero_gradients();
    Gradients g_c = result.nets.critic.zero_gradients();
    Gradients g_s = result.nets.state_value.zero_gradients();
    UpdateLog log;
    log.update = u;
    for (const auto& o : outputs) {
      if (o.episodes == 0) continue;
      const double wgt =
          static_cast<double>(o.episodes) / cfg.episodes_per_update;
      g_c.add_scaled(o.critic.grads, wgt);
      g_a.add_scaled(o.actor.grads, wgt);
      g_s.add_scaled(o.state_value.grads, wgt);
      log.critic_loss += wgt * o.critic.loss;
      log.actor_loss += wgt * o.actor.loss;
      log.state_value_loss += wgt * o.state_value.loss;
      log.mean_episode_return += o.sum_return / cfg.episodes_per_update;
    }

    const bool finite = g_a.all_finite() && g_c.all_finite() &&
                        g_s.all_finite() && std::isfinite(log.critic_loss) &&
                        std::isfinite(log.actor_loss) &&
                        std::isfinite(log.state_value_loss);
    if (!finite) {
      result.nets = snapshot;  // keep the last good checkpoint
      result.diverged = true;
      break;
    }
    rmsprop_step(opt_c, result.nets.critic, g_c);
    rmsprop_step(opt_a, result.nets.actor, g_a);
    rmsprop_step(opt_s, result.nets.state_value, g_s);

    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    result.log.push_back(log);
  }
  return result;
}

void write_training_log(const std::vector<UpdateLog>& log,
                        const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open training log for writing: " + path);
  os << "update,critic_loss,actor_loss,state_value_loss,mean_episode_return,"
        "seconds\n";
  char buf[256];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.6g\n", row.update,
                  row.critic_loss, row.actor_loss, row.state_value_loss,
                  row.mean_episode_return, row.seconds);
    os << buf;
  }
}

}  // namespace mimo
