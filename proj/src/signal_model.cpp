#include "mimo/signal_model.hpp"

#include <cmath>

namespace mimo {

ComplexChannelInstance make_base_channel(int n_r, int n_t, double epsilon,
                                         std::uint64_t rng_seed,
                                         bool real_valued) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw InvalidParameterError("epsilon must be in [0, 1]");
  ComplexChannelInstance base;
  base.epsilon = epsilon;
  base.rng_seed = rng_seed;
  base.real_valued = real_valued;
  Rng rng = make_rng(rng_seed, 0x6261736543686eULL);  // base-channel stream
  std::normal_distribution<double> gauss(0.0, 1.0);
  base.H_c.resize(n_r, n_t);
  const double cs = 1.0 / std::sqrt(2.0);
  for (int r = 0; r < n_r; ++r)
    for (int c = 0; c < n_t; ++c)
      base.H_c(r, c) = real_valued
                           ? std::complex<double>(gauss(rng), 0.0)
                           : std::complex<double>(cs * gauss(rng), cs * gauss(rng));
  return base;
}

Eigen::MatrixXcd generate_varying_channel(const ComplexChannelInstance& base,
                                          std::uint64_t j) {
  if (base.epsilon < 0.0 || base.epsilon > 1.0)
    throw InvalidParameterError("epsilon must be in [0, 1]");
  const double eps = base.epsilon;
  const double keep = std::sqrt(1.0 - eps * eps);
  Eigen::MatrixXcd out = keep * base.H_c;
  if (eps == 0.0) return out;
  Rng rng = make_rng(base.rng_seed, 0x766172ULL, j);  // per-j variation stream
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double cs = 1.0 / std::sqrt(2.0);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      std::complex<double> w =
          base.real_valued
              ? std::complex<double>(gauss(rng), 0.0)
              : std::complex<double>(cs * gauss(rng), cs * gauss(rng));
      out(r, c) += eps * w;
    }
  return out;
}

RealSystem to_real_system(const Eigen::MatrixXcd& H_c,
                          const Eigen::VectorXcd& y_c, double sigma_w2,
                          const Constellation& constellation) {
  if (sigma_w2 <= 0.0) throw InvalidParameterError("sigma_w2 must be positive");
  if (y_c.size() != H_c.rows())
    throw ShapeError("received vector length does not match channel rows");

  RealSystem sys;
  sys.constellation = constellation;
  const int n_r = static_cast<int>(H_c.rows());
  const int n_t = static_cast<int>(H_c.cols());

  if (constellation.real_valued) {
    sys.H = H_c.real();
    sys.y_prime = y_c.real();
    sys.sigma_w2 = sigma_w2;
  } else {
    const int n = 2 * n_r;
    const int m = 2 * n_t;
    sys.H.resize(n, m);
    sys.H.topLeftCorner(n_r, n_t) = H_c.real();
    sys.H.topRightCorner(n_r, n_t) = -H_c.imag();
    sys.H.bottomLeftCorner(n_r, n_t) = H_c.imag();
    sys.H.bottomRightCorner(n_r, n_t) = H_c.real();
    sys.y_prime.resize(n);
    sys.y_prime.head(n_r) = y_c.real();
    sys.y_prime.tail(n_r) = y_c.imag();
    sys.sigma_w2 = sigma_w2 / 2.0;  // complex noise split over real dims
  }

  const int n = sys.n();
  const int m = sys.m();
  if (n < m) throw ShapeError("underdetermined system: n < m");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sys.H);
  sys.Q_mat = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  sys.R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  // force nonnegative diagonal so the decomposition is unique
  for (int i = 0; i < m; ++i) {
    if (sys.R(i, i) < 0.0) {
      sys.R.row(i) = -sys.R.row(i);
      sys.Q_mat.col(i) = -sys.Q_mat.col(i);
    }
  }
  for (int i = 0; i < m; ++i)
    if (sys.R(i, i) < 1e-12)
      throw DegenerateChannelError("near-singular channel: zero R diagonal");

  sys.y = sys.Q_mat.transpose() * sys.y_prime;
  return sys;
}

double branch_metric(const RealSystem& sys, std::span<const double> recovered,
                     double candidate) {
  const int m = sys.m();
  const int step = static_cast<int>(recovered.size());
  if (step >= m) throw InvalidParameterError("path already complete");
  const int row = m - step - 1;  // zero-based k-1, k = m - step
  double acc = sys.R(row, row) * candidate;
  for (int j = 0; j < step; ++j) acc += sys.R(row, m - 1 - j) * recovered[j];
  const double resid = sys.y(row) - acc;
  return resid * resid;
}

double path_metric(const RealSystem& sys, std::span<const double> recovered) {
  const int len = static_cast<int>(recovered.size());
  if (len > sys.m()) throw InvalidParameterError("path longer than m");
  double d = 0.0;
  for (int j = 0; j < len; ++j) {
    if (!sys.constellation.contains(recovered[j]))
      throw InvalidParameterError("symbol not in PAM alphabet");
    d += branch_metric(sys, recovered.subspan(0, j), recovered[j]);
  }
  return d;
}

double snr_to_noise_variance(double snr_db, int n_t, double sigma_x2) {
  if (!std::isfinite(snr_db)) throw InvalidParameterError("snr_db not finite");
  return n_t * sigma_x2 / std::pow(10.0, snr_db / 10.0);
}

RealSystem make_instance(const ComplexChannelInstance& base,
                         const Constellation& constellation, double snr_db,
                         std::uint64_t channel_index, Rng& rng) {
  const int n_r = static_cast<int>(base.H_c.rows());
  const int n_t = static_cast<int>(base.H_c.cols());
  const double sigma_w2 =
      snr_to_noise_variance(snr_db, n_t, constellation.symbol_energy);

  Eigen::MatrixXcd H_j = generate_varying_channel(base, channel_index);

  std::uniform_int_distribution<int> pick(0, constellation.order() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::VectorXcd x_c(n_t);
  Eigen::VectorXd x_real;
  if (constellation.real_valued) {
    x_real.resize(n_t);
    for (int i = 0; i < n_t; ++i) {
      x_real(i) = constellation.pam_levels[pick(rng)];
      x_c(i) = x_real(i);
    }
  } else {
    x_real.resize(2 * n_t);
    for (int i = 0; i < n_t; ++i) {
      double a = constellation.pam_levels[pick(rng)];
      double b = constellation.pam_levels[pick(rng)];
      x_c(i) = std::complex<double>(a, b);
      x_real(i) = a;
      x_real(n_t + i) = b;
    }
  }

  Eigen::VectorXcd w(n_r);
  if (constellation.real_valued) {
    const double s = std::sqrt(sigma_w2);
    for (int i = 0; i < n_r; ++i) w(i) = s * gauss(rng);
  } else {
    const double s = std::sqrt(sigma_w2 / 2.0);
    for (int i = 0; i < n_r; ++i)
      w(i) = std::complex<double>(s * gauss(rng), s * gauss(rng));
  }

  Eigen::VectorXcd y_c = H_j * x_c + w;
  RealSystem sys = to_real_system(H_j, y_c, sigma_w2, constellation);
  sys.x_true = x_real;
  return sys;
}

}  // namespace mimo
