#include "mimo/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "mimo/baselines.hpp"

namespace mimo {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

DetectorSpec parse_detector_spec(const std::string& token) {
  DetectorSpec spec;
  spec.name = token;
  auto parts = split(token, ':');
  if (parts.empty()) throw ConfigError("empty detector spec");
  const std::string& head = parts[0];

  if (head == "ml") {
    spec.kind = DetectorSpec::Kind::Ml;
  } else if (head == "mmse") {
    spec.kind = DetectorSpec::Kind::Mmse;
  } else if (head == "mcts") {
    spec.kind = DetectorSpec::Kind::Mcts;
  } else if (head == "drl") {
    spec.kind = DetectorSpec::Kind::Drl;
  } else if (head == "drl_mcts") {
    spec.kind = DetectorSpec::Kind::DrlMcts;
  } else {
    throw ConfigError("unknown detector: " + head);
  }

  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto kv = split(parts[i], '=');
    if (kv.size() != 2)
      throw ConfigError("bad detector parameter: " + parts[i]);
    const std::string& key = kv[0];
    const double val = std::stod(kv[1]);
    if (spec.kind == DetectorSpec::Kind::Mcts) {
      if (key == "playouts")
        spec.mcts.playouts_initial = static_cast<int>(val);
      else if (key == "c_uct")
        spec.mcts.c_uct = val;
      else if (key == "beta_p")
        spec.mcts.beta_p = val;
      else
        throw ConfigError("unknown mcts parameter: " + key);
    } else if (spec.kind == DetectorSpec::Kind::DrlMcts) {
      if (key == "playouts")
        spec.drl_mcts.playouts_initial = static_cast<int>(val);
      else if (key == "c_puct")
        spec.drl_mcts.c_puct = val;
      else if (key == "beta_p")
        spec.drl_mcts.beta_p = val;
      else
        throw ConfigError("unknown drl_mcts parameter: " + key);
    } else {
      throw ConfigError("detector " + head + " takes no parameters");
    }
  }
  return spec;
}

void Scenario::validate() const {
  if (n_t < 1 || n_r < 1) throw ConfigError("antenna counts must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (snr_grid_db.empty()) throw ConfigError("snr_grid_db must be nonempty");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw ConfigError("epsilon must be in [0, 1]");
  if (detector_set.empty()) throw ConfigError("detector_set must be nonempty");
  constellation();  // resolvable modulation
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file: " + path);
  Scenario sc;
  sc.snr_grid_db.clear();
  sc.detector_set.clear();

  std::string line;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("bad scenario line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "n_t") sc.n_t = std::stoi(value);
      else if (key == "n_r") sc.n_r = std::stoi(value);
      else if (key == "modulation") sc.modulation = value;
      else if (key == "epsilon") sc.epsilon = std::stod(value);
      else if (key == "snr_grid_db") {
        for (auto& tok : split(value, ',')) sc.snr_grid_db.push_back(std::stod(trim(tok)));
      } else if (key == "trials") sc.trials = std::stoi(value);
      else if (key == "seed") sc.seed = std::stoull(value);
      else if (key == "runtime_instances") sc.runtime_instances = std::stoi(value);
      else if (key == "detectors") {
        std::stringstream ss(value);
        std::string tok;
        while (ss >> tok) sc.detector_set.push_back(parse_detector_spec(tok));
      }
      else if (key == "gamma") sc.train.gamma = std::stod(value);
      else if (key == "c1") sc.train.c1 = std::stod(value);
      else if (key == "c2") sc.train.c2 = std::stod(value);
      else if (key == "c3") sc.train.c3 = std::stod(value);
      else if (key == "c4") sc.train.c4 = std::stod(value);
      else if (key == "learning_rate") sc.train.learning_rate = std::stod(value);
      else if (key == "workers") sc.train.workers = std::stoi(value);
      else if (key == "episodes_per_update") sc.train.episodes_per_update = std::stoi(value);
      else if (key == "total_updates") sc.train.total_updates = std::stoi(value);
      else if (key == "reward_scale") sc.train.reward_scale = std::stod(value);
      else if (key == "train_snr_min_db") sc.train.train_snr_min_db = std::stod(value);
      else if (key == "train_snr_max_db") sc.train.train_snr_max_db = std::stod(value);
      else throw ConfigError("unknown scenario key: " + key);
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for scenario key " + key + ": " + value);
    }
  }
  sc.train.seed = sc.seed;
  sc.validate();
  return sc;
}

ComplexChannelInstance scenario_base_channel(const Scenario& scenario) {
  return make_base_channel(scenario.n_r, scenario.n_t, scenario.epsilon,
                           scenario.seed, scenario.constellation().real_valued);
}

int worker_thread_cap() {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("MIMO_MAX_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = std::min(cap, v);
  }
  return cap;
}

namespace {

Eigen::VectorXd run_detector(const DetectorSpec& spec, const RealSystem& sys,
                             const DrlNets* nets, std::uint64_t trial_seed) {
  switch (spec.kind) {
    case DetectorSpec::Kind::Ml:
      return detect_ml(sys);
    case DetectorSpec::Kind::Mmse:
      return detect_mmse(sys);
    case DetectorSpec::Kind::Mcts: {
      MctsConfig cfg = spec.mcts;
      cfg.rng_seed = trial_seed;
      return detect_mcts(sys, cfg);
    }
    case DetectorSpec::Kind::Drl:
      return detect_drl_greedy(sys, *nets);
    case DetectorSpec::Kind::DrlMcts: {
      DrlMctsConfig cfg = spec.drl_mcts;
      cfg.rng_seed = trial_seed;
      return detect_drl_mcts(sys, *nets, cfg);
    }
  }
  throw ConfigError("unhandled detector kind");
}

long count_symbol_errors(const Scenario& sc, const Eigen::VectorXd& truth,
                         const Eigen::VectorXd& decided) {
  long errors = 0;
  if (sc.constellation().real_valued) {
    for (int i = 0; i < truth.size(); ++i)
      if (decided(i) != truth(i)) ++errors;
  } else {
    // one complex symbol is wrong if either component differs
    const int n_t = sc.n_t;
    for (int i = 0; i < n_t; ++i)
      if (decided(i) != truth(i) || decided(n_t + i) != truth(n_t + i)) ++errors;
  }
  return errors;
}

RealSystem draw_instance(const Scenario& sc, const ComplexChannelInstance& base,
                         double snr_db, int snr_idx, int trial,
                         std::atomic<long>* resamples) {
  Rng rng = make_rng(sc.seed, 0x7472696cULL, snr_idx, trial);
  const std::uint64_t j = derive_seed(0x62656e6aULL, snr_idx, trial);
  for (int attempt = 0;; ++attempt) {
    try {
      return make_instance(base, sc.constellation(), snr_db, j + attempt, rng);
    } catch (const DegenerateChannelError&) {
      if (resamples) resamples->fetch_add(1);
      if (attempt >= 64) throw;
    }
  }
}

}  // namespace

double measure_runtime(const std::function<void(const RealSystem&)>& detector,
                       const std::vector<RealSystem>& instances,
                       int warmup_runs) {
  if (static_cast<int>(instances.size()) <= warmup_runs)
    throw InvalidParameterError("not enough instances for runtime measurement");
  double total = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    detector(instances[i]);
    const auto t1 = std::chrono::steady_clock::now();
    if (static_cast<int>(i) >= warmup_runs) {
      total += std::chrono::duration<double>(t1 - t0).count();
      ++counted;
    }
  }
  return total / counted;
}

std::vector<SerResult> run_sweep(const Scenario& scenario,
                                 const DrlNets* checkpoints,
                                 bool measure_runtimes) {
  scenario.validate();
  for (const auto& d : scenario.detector_set)
    if (d.needs_checkpoint() && checkpoints == nullptr)
      throw ConfigError("detector " + d.name + " requires a checkpoint");
  if (checkpoints) {
    const int want = 4 * scenario.m() + scenario.n() + 2;
    if (checkpoints->actor.input_dim() != want)
      throw ConfigError("checkpoint does not match scenario dimensions");
  }

  const ComplexChannelInstance base = scenario_base_channel(scenario);
  const int n_det = static_cast<int>(scenario.detector_set.size());
  const int n_snr = static_cast<int>(scenario.snr_grid_db.size());
  const int trials = scenario.trials;
  const double symbols_per_trial = scenario.n_t;

  // err[snr][det]
  std::vector<std::vector<long>> errors(n_snr, std::vector<long>(n_det, 0));
  std::atomic<long> resamples{0};

  const int n_threads = std::min(worker_thread_cap(), trials);
  for (int si = 0; si < n_snr; ++si) {
    const double snr_db = scenario.snr_grid_db[si];
    std::vector<std::vector<long>> partial(n_threads,
                                           std::vector<long>(n_det, 0));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&, w]() {
        for (int t = w; t < trials; t += n_threads) {
          RealSystem sys =
              draw_instance(scenario, base, snr_db, si, t, &resamples);
          for (int d = 0; d < n_det; ++d) {
            const std::uint64_t det_seed =
                derive_seed(scenario.seed, 0xde7ec7ULL, d, si, t);
            Eigen::VectorXd out =
                run_detector(scenario.detector_set[d], sys, checkpoints, det_seed);
            partial[w][d] +=
                count_symbol_errors(scenario, sys.x_true, out);
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (int w = 0; w < n_threads; ++w)
      for (int d = 0; d < n_det; ++d) errors[si][d] += partial[w][d];
  }

  const long resampled = resamples.load();
  if (resampled > static_cast<long>(trials) * n_snr / 100)
    throw NumericalError("degenerate-channel resampling exceeded 1% of trials");

  std::vector<SerResult> results;
  for (int d = 0; d < n_det; ++d) {
    for (int si = 0; si < n_snr; ++si) {
      SerResult r;
      r.detector = scenario.detector_set[d].name;
      r.snr_db = scenario.snr_grid_db[si];
      r.trials = trials;
      r.symbol_errors = errors[si][d];
      r.symbols_total = static_cast<long>(trials * symbols_per_trial);
      r.ser = static_cast<double>(r.symbol_errors) / r.symbols_total;
      results.push_back(r);
    }
  }

  if (measure_runtimes && scenario.runtime_instances > 0) {
    for (int si = 0; si < n_snr; ++si) {
      std::vector<RealSystem> instances;
      instances.reserve(scenario.runtime_instances);
      Rng rng = make_rng(scenario.seed, 0x72756e74ULL, si);
      for (int i = 0; i < scenario.runtime_instances; ++i) {
        const std::uint64_t j = derive_seed(0x72746aULL, si, i);
        for (int attempt = 0;; ++attempt) {
          try {
            instances.push_back(make_instance(base, scenario.constellation(),
                                              scenario.snr_grid_db[si],
                                              j + attempt, rng));
            break;
          } catch (const DegenerateChannelError&) {
            if (attempt >= 64) throw;
          }
        }
      }
      for (int d = 0; d < n_det; ++d) {
        const DetectorSpec& spec = scenario.detector_set[d];
        int counter = 0;
        auto fn = [&](const RealSystem& sys) {
          const std::uint64_t det_seed =
              derive_seed(scenario.seed, 0x72de7ULL, d, si, counter++);
          run_detector(spec, sys, checkpoints, det_seed);
        };
        const double mean_s = measure_runtime(fn, instances);
        results[static_cast<std::size_t>(d) * n_snr + si].mean_runtime_s = mean_s;
      }
    }
  }

  std::sort(results.begin(), results.end(), [](const SerResult& a, const SerResult& b) {
    if (a.detector != b.detector) return a.detector < b.detector;
    return a.snr_db < b.snr_db;
  });
  return results;
}

void emit_csv(const std::vector<SerResult>& results, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open output file: " + path);
  os << "detector,snr_db,trials,symbol_errors,ser,mean_runtime_s\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%s,%g,%d,%ld,%.6g,%.9g\n",
                  r.detector.c_str(), r.snr_db, r.trials, r.symbol_errors, r.ser,
                  r.mean_runtime_s);
    os << buf;
  }
  if (!os) throw Error("write failed: " + path);
}

}  // namespace mimo
