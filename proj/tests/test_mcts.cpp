#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>

#include "mimo/baselines.hpp"
#include "mimo/mcts.hpp"

using namespace mimo;

namespace {

RealSystem small_instance(std::uint64_t seed, double snr_db = 12.0) {
  auto base = make_base_channel(2, 2, 0.1, seed, true);
  Rng rng = make_rng(seed, 999);
  return make_instance(base, Constellation::bpsk(), snr_db, 1, rng);
}

long count_nodes(const MctsNode& node) {
  long n = 1;
  for (const auto& ch : node.children) n += count_nodes(*ch);
  return n;
}

void check_visit_conservation(const MctsNode& node) {
  for (const auto& ch : node.children) {
    CHECK(node.visits >= ch->visits);
    check_visit_conservation(*ch);
  }
}

}  // namespace

TEST_CASE("config validation") {
  MctsConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.c_uct = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameterError);
  cfg = MctsConfig{};
  cfg.playouts_initial = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameterError);
  cfg = MctsConfig{};
  cfg.beta_p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameterError);
}

TEST_CASE("uct selection") {
  MctsNode node;
  node.visits = 2;
  for (int i = 0; i < 2; ++i) {
    auto ch = std::make_unique<MctsNode>();
    ch->d_bar = 0.0;
    ch->visits = 1;
    node.children.push_back(std::move(ch));
  }
  // symmetric statistics: tie-break to child 0
  CHECK(select_uct(node, 350.0) == 0);

  // exploration term dominates the value gap
  node.visits = 4;
  node.children[0]->d_bar = -5.0;
  node.children[0]->visits = 3;
  node.children[1]->d_bar = -10.0;
  node.children[1]->visits = 1;
  CHECK(select_uct(node, 350.0) == 1);
  // pure exploitation flips the choice
  CHECK(select_uct(node, 0.0) == 0);

  // unvisited children take priority, lowest index first
  node.children[1]->visits = 0;
  CHECK(select_uct(node, 0.0) == 1);
  node.children[0]->visits = 0;
  CHECK(select_uct(node, 350.0) == 0);
}

TEST_CASE("playout decay schedule") {
  CHECK(playouts_at_step(200, 0.95, 0) == 200);
  CHECK(playouts_at_step(200, 0.95, 3) == 171);  // floor(171.475)
  CHECK(playouts_at_step(5, 0.95, 200) == 1);    // floored at 1
}

TEST_CASE("first playout structure") {
  auto sys = small_instance(1);
  MctsNode root;
  Rng rng = make_rng(4);
  auto rec = run_playout(root, {}, sys, 350.0, rng);
  CHECK(root.visits == 1);
  CHECK(root.children.size() == 2);  // exactly |Q| children appended
  CHECK(count_nodes(root) == 3);
  // the simulated child was credited once
  long visited = 0;
  for (const auto& ch : root.children) visited += ch->visits;
  CHECK(visited == 1);
  CHECK(rec.value <= 0.0);
  CHECK(rec.path.size() == 2);  // root + simulated child
}

TEST_CASE("root visits count playouts; tree size bounded") {
  auto sys = small_instance(2);
  MctsNode root;
  Rng rng = make_rng(5);
  const int P = 64;
  for (int p = 0; p < P; ++p) run_playout(root, {}, sys, 350.0, rng);
  CHECK(root.visits == P);
  CHECK(count_nodes(root) <= 1 + P * 2);
  check_visit_conservation(root);
  long z = 0;
  for (const auto& ch : root.children) z += ch->visits;
  CHECK(z == P);
}

TEST_CASE("d_bar is the mean of backpropagated values") {
  auto sys = small_instance(3);
  MctsNode root;
  Rng rng = make_rng(6);
  double sum = 0.0;
  const int P = 40;
  for (int p = 0; p < P; ++p) {
    auto rec = run_playout(root, {}, sys, 350.0, rng);
    CHECK(rec.value <= 0.0);
    sum += rec.value;
  }
  CHECK(root.d_bar == doctest::Approx(sum / P).epsilon(1e-9));
}

TEST_CASE("d_bar never positive anywhere in the tree") {
  auto sys = small_instance(9);
  MctsNode root;
  Rng rng = make_rng(10);
  for (int p = 0; p < 100; ++p) run_playout(root, {}, sys, 350.0, rng);
  std::function<void(const MctsNode&)> walk = [&](const MctsNode& nd) {
    CHECK(nd.d_bar <= 0.0);
    for (const auto& ch : nd.children) walk(*ch);
  };
  walk(root);
}

TEST_CASE("terminal playouts backpropagate the exact metric") {
  auto sys = small_instance(4);
  MctsNode root;
  Rng rng = make_rng(7);
  // saturate a 2x2 BPSK tree (m=4, 16 leaves) so selection reaches terminals
  std::vector<double> last_values;
  for (int p = 0; p < 400; ++p)
    last_values.push_back(run_playout(root, {}, sys, 350.0, rng).value);
  // every backpropagated value corresponds to a full-path metric
  for (double v : last_values) CHECK(v <= 1e-12);
  // the best leaf value seen equals the ML metric
  const Eigen::VectorXd ml = detect_ml(sys);
  const double dml = (sys.y - sys.R * ml).squaredNorm();
  double best = -1e300;
  for (double v : last_values) best = std::max(best, v);
  CHECK(best == doctest::Approx(-dml).epsilon(1e-9));
}

TEST_CASE("detection is deterministic and in-alphabet") {
  auto sys = small_instance(5);
  MctsConfig cfg;
  cfg.playouts_initial = 50;
  cfg.rng_seed = 123;
  const Eigen::VectorXd a = detect_mcts(sys, cfg);
  const Eigen::VectorXd b = detect_mcts(sys, cfg);
  CHECK(a == b);
  for (int i = 0; i < a.size(); ++i) CHECK(sys.constellation.contains(a(i)));
  cfg.rng_seed = 124;
  CHECK(detect_mcts(sys, cfg).size() == a.size());
}

TEST_CASE("heavy search approaches the ml answer") {
  // moderate exploration and a saturating budget on a tiny tree
  int agree = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    auto sys = small_instance(2000 + t, 16.0);
    MctsConfig cfg;
    cfg.c_uct = 10.0;
    cfg.playouts_initial = 600;
    cfg.beta_p = 0.99;
    cfg.rng_seed = t;
    if (detect_mcts(sys, cfg) == detect_ml(sys)) ++agree;
  }
  CHECK(agree >= 45);
}
