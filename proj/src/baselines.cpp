#include "mimo/baselines.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mimo {

namespace {

void ml_dfs(const RealSystem& sys, std::vector<double>& recovered,
            double partial, double& incumbent, std::vector<double>& best) {
  const int m = sys.m();
  if (static_cast<int>(recovered.size()) == m) {
    if (partial < incumbent) {
      incumbent = partial;
      best = recovered;
    }
    return;
  }
  for (double q : sys.constellation.pam_levels) {
    const double d = partial + branch_metric(sys, recovered, q);
    if (d >= incumbent) continue;  // prune: metric can only grow
    recovered.push_back(q);
    ml_dfs(sys, recovered, d, incumbent, best);
    recovered.pop_back();
  }
}

}  // namespace

Eigen::VectorXd detect_ml(const RealSystem& sys, std::uint64_t search_cap) {
  const int m = sys.m();
  const int q = sys.constellation.order();
  double space = std::pow(static_cast<double>(q), m);
  if (space > static_cast<double>(search_cap))
    throw CapacityError("ML search space exceeds cap");

  std::vector<double> recovered, best;
  double incumbent = std::numeric_limits<double>::infinity();
  ml_dfs(sys, recovered, 0.0, incumbent, best);

  // recovery order is x_m first; map back to natural index order
  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x(m - 1 - j) = best[j];
  return x;
}

Eigen::VectorXd detect_mmse(const RealSystem& sys) {
  const int m = sys.m();
  const double sigma_x2_real = sys.constellation.real_valued
                                   ? sys.constellation.symbol_energy
                                   : sys.constellation.symbol_energy / 2.0;
  const double reg = sys.sigma_w2 / sigma_x2_real;

  Eigen::MatrixXd A = sys.H.transpose() * sys.H;
  A.diagonal().array() += reg;
  Eigen::VectorXd xf = A.ldlt().solve(sys.H.transpose() * sys.y_prime);
  if (!xf.allFinite()) throw NumericalError("MMSE filter solve failed");

  Eigen::VectorXd x(m);
  for (int i = 0; i < m; ++i) x(i) = sys.constellation.slice(xf(i));
  return x;
}

}  // namespace mimo
