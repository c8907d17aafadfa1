#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mimo/drl_agent.hpp"
#include "mimo/drl_mcts.hpp"
#include "mimo/mcts.hpp"
#include "mimo/signal_model.hpp"

namespace mimo {

struct DetectorSpec {
  enum class Kind { Ml, Mmse, Mcts, Drl, DrlMcts };
  std::string name;  // spec token, e.g. "mcts:playouts=200:c_uct=350"
  Kind kind = Kind::Ml;
  MctsConfig mcts;
  DrlMctsConfig drl_mcts;

  bool needs_checkpoint() const {
    return kind == Kind::Drl || kind == Kind::DrlMcts;
  }
};

DetectorSpec parse_detector_spec(const std::string& token);

struct Scenario {
  int n_t = 4;
  int n_r = 4;
  std::string modulation = "BPSK";
  double epsilon = 0.1;
  std::vector<double> snr_grid_db;
  int trials = 10000;
  std::vector<DetectorSpec> detector_set;
  std::uint64_t seed = 1;
  int runtime_instances = 110;  // >= 100 measured + 10 warm-up
  TrainConfig train;

  Constellation constellation() const {
    return Constellation::from_name(modulation);
  }
  int m() const {
    return constellation().real_valued ? n_t : 2 * n_t;
  }
  int n() const {
    return constellation().real_valued ? n_r : 2 * n_r;
  }
  void validate() const;
};

// Flat key=value scenario file; '#' starts a comment line.
Scenario load_scenario(const std::string& path);

struct SerResult {
  std::string detector;
  double snr_db = 0.0;
  long symbol_errors = 0;
  long symbols_total = 0;
  int trials = 0;
  double ser = 0.0;
  double mean_runtime_s = 0.0;
};

// Monte-Carlo SER sweep: every detector sees the bit-identical instance at
// each (SNR, trial); deterministic given scenario.seed regardless of the
// worker-thread count (capped by MIMO_MAX_THREADS). Runtime measurement,
// when enabled, runs single-threaded afterwards.
std::vector<SerResult> run_sweep(const Scenario& scenario,
                                 const DrlNets* checkpoints,
                                 bool measure_runtimes = true);

void emit_csv(const std::vector<SerResult>& results, const std::string& path);

// Mean wall-clock seconds per detection over the given instances,
// excluding the first warmup_runs instances.
double measure_runtime(const std::function<void(const RealSystem&)>& detector,
                       const std::vector<RealSystem>& instances,
                       int warmup_runs = 10);

// The base channel shared between training and evaluation for a scenario.
ComplexChannelInstance scenario_base_channel(const Scenario& scenario);

int worker_thread_cap();

}  // namespace mimo
