#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "mimo/baselines.hpp"
#include "mimo/bench.hpp"
#include "mimo/drl_agent.hpp"
#include "mimo/drl_mcts.hpp"

namespace {

int do_train(const std::string& scenario_path, const std::string& out_path,
             const std::string& log_path) {
  mimo::Scenario sc = mimo::load_scenario(scenario_path);
  mimo::TrainScenario ts;
  ts.n_t = sc.n_t;
  ts.n_r = sc.n_r;
  ts.constellation = sc.constellation();
  ts.epsilon = sc.epsilon;
  ts.channel_seed = sc.seed;

  std::printf("training %s %dx%d eps=%g: %d updates x %d episodes, %d workers\n",
              sc.modulation.c_str(), sc.n_t, sc.n_r, sc.epsilon,
              sc.train.total_updates, sc.train.episodes_per_update,
              sc.train.workers);
  mimo::TrainResult result = mimo::train(sc.train, ts);
  if (result.diverged)
    std::fprintf(stderr, "warning: training diverged; kept last good parameters\n");
  mimo::save_checkpoint(result.nets, out_path);
  if (!log_path.empty()) mimo::write_training_log(result.log, log_path);
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::printf("final losses: critic=%.4g actor=%.4g state_value=%.4g "
                "mean_return=%.4g\n",
                last.critic_loss, last.actor_loss, last.state_value_loss,
                last.mean_episode_return);
  }
  std::printf("checkpoint written to %s\n", out_path.c_str());
  return 0;
}

int do_bench(const std::string& scenario_path, const std::string& ckpt_path,
             const std::string& out_path) {
  mimo::Scenario sc = mimo::load_scenario(scenario_path);
  mimo::DrlNets nets;
  const mimo::DrlNets* nets_ptr = nullptr;
  if (!ckpt_path.empty()) {
    nets = mimo::load_checkpoint(ckpt_path);
    nets_ptr = &nets;
  }
  auto results = mimo::run_sweep(sc, nets_ptr);
  mimo::emit_csv(results, out_path);
  for (const auto& r : results)
    std::printf("%-40s snr=%5.1f ser=%.6g runtime=%.3gs\n", r.detector.c_str(),
                r.snr_db, r.ser, r.mean_runtime_s);
  std::printf("results written to %s\n", out_path.c_str());
  return 0;
}

int do_detect(const std::string& scenario_path, const std::string& ckpt_path,
              double snr_db, int count) {
  mimo::Scenario sc = mimo::load_scenario(scenario_path);
  sc.snr_grid_db = {snr_db};
  sc.trials = count;
  sc.runtime_instances = 0;
  mimo::DrlNets nets;
  const mimo::DrlNets* nets_ptr = nullptr;
  if (!ckpt_path.empty()) {
    nets = mimo::load_checkpoint(ckpt_path);
    nets_ptr = &nets;
  }
  auto results = mimo::run_sweep(sc, nets_ptr, /*measure_runtimes=*/false);
  for (const auto& r : results)
    std::printf("%-40s snr=%5.1f errors=%ld/%ld ser=%.6g\n", r.detector.c_str(),
                r.snr_db, r.symbol_errors, r.symbols_total, r.ser);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO symbol-detection toolkit: MCTS, DRL and DRL-MCTS detectors"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, ckpt_path, log_path;
  double snr_db = 12.0;
  int count = 100;

  auto* train_cmd = app.add_subcommand("train", "self-play train the DRL agent");
  train_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
  train_cmd->add_option("--out", out_path, "output checkpoint path")->required();
  train_cmd->add_option("--log", log_path, "training log CSV path");

  auto* bench_cmd = app.add_subcommand("bench", "SER/runtime sweep over SNR");
  bench_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
  bench_cmd->add_option("--ckpt", ckpt_path, "checkpoint for DRL detectors");
  bench_cmd->add_option("--out", out_path, "output CSV path")->required();

  auto* detect_cmd = app.add_subcommand("detect", "detect at a single SNR");
  detect_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
  detect_cmd->add_option("--ckpt", ckpt_path, "checkpoint for DRL detectors");
  detect_cmd->add_option("--snr", snr_db, "SNR in dB")->required();
  detect_cmd->add_option("--n", count, "number of symbol vectors")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return do_train(scenario_path, out_path, log_path);
    if (bench_cmd->parsed()) return do_bench(scenario_path, ckpt_path, out_path);
    if (detect_cmd->parsed()) return do_detect(scenario_path, ckpt_path, snr_db, count);
  } catch (const mimo::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const mimo::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
