#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mimo/common.hpp"
#include "mimo/constellation.hpp"

namespace mimo {

// Base channel H_c for a varying-channel scenario: the per-symbol channel is
// sqrt(1 - eps^2) * H_c + eps * W_j with W_j drawn fresh for each index j.
struct ComplexChannelInstance {
  Eigen::MatrixXcd H_c;  // N_R x N_T, unit-variance entries (real for BPSK)
  double epsilon = 0.0;
  std::uint64_t rng_seed = 0;
  bool real_valued = false;
};

// The real-valued detection instance consumed by every detector.
// Immutable after construction; safe to share across concurrent detections.
struct RealSystem {
  Eigen::MatrixXd H;        // n x m
  Eigen::VectorXd y_prime;  // n
  Eigen::MatrixXd Q_mat;    // n x m, column-orthonormal
  Eigen::MatrixXd R;        // m x m upper-triangular, nonnegative diagonal
  Eigen::VectorXd y;        // m, = Q^T y'
  double sigma_w2 = 0.0;    // noise variance per real dimension
  Constellation constellation;
  Eigen::VectorXd x_true;  // ground truth, test use only (may be empty)

  int n() const { return static_cast<int>(H.rows()); }
  int m() const { return static_cast<int>(H.cols()); }
};

// Partial path through the detection tree. symbols are in recovery order:
// symbols[0] = x_m, symbols[1] = x_{m-1}, ..., i.e. symbols[j] holds
// x_{m-j} (1-indexed), most recently recovered element last.
struct PartialPath {
  std::vector<double> symbols;
  double cum_metric = 0.0;

  int step() const { return static_cast<int>(symbols.size()); }
};

ComplexChannelInstance make_base_channel(int n_r, int n_t, double epsilon,
                                         std::uint64_t rng_seed,
                                         bool real_valued);

// H_c^j = sqrt(1 - eps^2) H_c + eps W_c^j, deterministic given (rng_seed, j).
Eigen::MatrixXcd generate_varying_channel(const ComplexChannelInstance& base,
                                          std::uint64_t j);

// Builds the stacked real model, runs a thin QR with nonnegative R diagonal,
// and computes y = Q^T y'. sigma_w2 is the complex-model noise variance; it
// is split as sigma_w2 / 2 per real dimension (used directly in BPSK mode).
// Throws DegenerateChannelError when R has a near-zero diagonal entry.
RealSystem to_real_system(const Eigen::MatrixXcd& H_c,
                          const Eigen::VectorXcd& y_c, double sigma_w2,
                          const Constellation& constellation);

// b(x_k^m) with k = m - path_len: the squared residual of row k given the
// already recovered symbols (recovery order) and the candidate for x_k.
double branch_metric(const RealSystem& sys, std::span<const double> recovered,
                     double candidate);

inline double branch_metric(const RealSystem& sys, const PartialPath& path,
                            double candidate) {
  return branch_metric(sys, std::span<const double>(path.symbols), candidate);
}

// d(x_k^m): cumulative branch metrics over a (possibly partial) path in
// recovery order. Accumulation runs from k = m downward, fixed order.
// Throws InvalidParameterError when a symbol is not in the alphabet.
double path_metric(const RealSystem& sys, std::span<const double> recovered);

// sigma_w^2 = N_T sigma_x^2 / 10^(snr_db/10)  (complex-model variance)
double snr_to_noise_variance(double snr_db, int n_t, double sigma_x2);

// One full Monte-Carlo instance: varying channel draw, random transmit
// vector, noise, and the assembled RealSystem with x_true filled in.
RealSystem make_instance(const ComplexChannelInstance& base,
                         const Constellation& constellation, double snr_db,
                         std::uint64_t channel_index, Rng& rng);

}  // namespace mimo
