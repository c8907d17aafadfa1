#include <doctest.h>

#include <cmath>
#include <complex>

#include "mimo/signal_model.hpp"

using namespace mimo;

namespace {

// Minimal system for metric-formula checks: only R, y, constellation matter.
RealSystem toy_system() {
  RealSystem sys;
  sys.R.resize(2, 2);
  sys.R << 1.0, 0.5, 0.0, 2.0;
  sys.y.resize(2);
  sys.y << 1.0, 2.0;
  sys.H = sys.R;
  sys.y_prime = sys.y;
  sys.sigma_w2 = 1.0;
  sys.constellation = Constellation::bpsk();
  return sys;
}

// Enumerate all PAM^m vectors in natural order.
std::vector<Eigen::VectorXd> all_vectors(const Constellation& c, int m) {
  std::vector<Eigen::VectorXd> out;
  const int q = c.order();
  long total = 1;
  for (int i = 0; i < m; ++i) total *= q;
  for (long code = 0; code < total; ++code) {
    Eigen::VectorXd x(m);
    long rem = code;
    for (int i = 0; i < m; ++i) {
      x(i) = c.pam_levels[rem % q];
      rem /= q;
    }
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("varying channel: degenerate mixing") {
  auto base = make_base_channel(4, 4, 0.0, 11, false);
  auto h1 = generate_varying_channel(base, 1);
  auto h2 = generate_varying_channel(base, 99);
  CHECK((h1 - base.H_c).norm() == 0.0);
  CHECK((h2 - base.H_c).norm() == 0.0);
}

TEST_CASE("varying channel: eps=1 decorrelates from base") {
  auto base = make_base_channel(50, 50, 1.0, 5, false);
  double dot = 0.0, nb = 0.0, nj = 0.0;
  int entries = 0;
  for (std::uint64_t j = 1; j <= 4; ++j) {
    auto hj = generate_varying_channel(base, j);
    for (int r = 0; r < hj.rows(); ++r)
      for (int c = 0; c < hj.cols(); ++c) {
        dot += hj(r, c).real() * base.H_c(r, c).real();
        nb += base.H_c(r, c).real() * base.H_c(r, c).real();
        nj += hj(r, c).real() * hj(r, c).real();
        ++entries;
      }
  }
  CHECK(entries == 10000);
  CHECK(std::abs(dot / std::sqrt(nb * nj)) < 0.05);
}

TEST_CASE("varying channel: deterministic per (seed, j)") {
  auto base = make_base_channel(4, 4, 0.3, 17, false);
  CHECK(generate_varying_channel(base, 7) == generate_varying_channel(base, 7));
  CHECK(generate_varying_channel(base, 7) != generate_varying_channel(base, 8));
}

TEST_CASE("varying channel: mixing preserves per-entry variance") {
  auto base = make_base_channel(40, 50, 0.6, 3, false);
  double sum2 = 0.0;
  long count = 0;
  for (std::uint64_t j = 1; j <= 25; ++j) {
    auto hj = generate_varying_channel(base, j);
    for (int r = 0; r < hj.rows(); ++r)
      for (int c = 0; c < hj.cols(); ++c) {
        sum2 += std::norm(hj(r, c));  // complex entries have unit variance
        ++count;
      }
  }
  CHECK(count == 50000);
  CHECK(sum2 / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("to_real_system: pure-imaginary identity block form") {
  Eigen::MatrixXcd hc = Eigen::MatrixXcd::Zero(2, 2);
  hc(0, 0) = std::complex<double>(0, 1);
  hc(1, 1) = std::complex<double>(0, 1);
  Eigen::VectorXcd yc = Eigen::VectorXcd::Zero(2);
  auto sys = to_real_system(hc, yc, 1.0, Constellation::qpsk());
  Eigen::MatrixXd want(4, 4);
  want << 0, 0, -1, 0,
          0, 0, 0, -1,
          1, 0, 0, 0,
          0, 1, 0, 0;
  CHECK((sys.H - want).norm() == 0.0);
  CHECK(sys.n() == 4);
  CHECK(sys.m() == 4);
}

TEST_CASE("to_real_system: orthogonal columns give diagonal R") {
  // a real column-orthogonal H via BPSK mode (no stacking)
  Eigen::MatrixXcd hc(3, 2);
  hc << 2, 0,
        0, 3,
        0, 0;
  Eigen::VectorXcd yc = Eigen::VectorXcd::Ones(3);
  auto sys = to_real_system(hc, yc, 1.0, Constellation::bpsk());
  CHECK(sys.R(0, 0) == doctest::Approx(2.0));
  CHECK(sys.R(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(sys.R(0, 1)) < 1e-12);
  CHECK(std::abs(sys.R(1, 0)) < 1e-12);
}

TEST_CASE("to_real_system: QR invariants on random instances") {
  Rng rng = make_rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    auto base = make_base_channel(4, 4, 0.1, 100 + trial, false);
    auto sys = make_instance(base, Constellation::qpsk(), 10.0, trial + 1, rng);
    // thin QR residual and column orthonormality
    CHECK((sys.H - sys.Q_mat * sys.R).norm() / sys.H.norm() < 1e-10);
    Eigen::MatrixXd qtq = sys.Q_mat.transpose() * sys.Q_mat;
    CHECK((qtq - Eigen::MatrixXd::Identity(sys.m(), sys.m())).cwiseAbs().maxCoeff() < 1e-9);
    for (int i = 0; i < sys.m(); ++i) {
      CHECK(sys.R(i, i) >= 0.0);
      for (int j = 0; j < i; ++j) CHECK(std::abs(sys.R(i, j)) < 1e-10);
    }
    CHECK((sys.y - sys.Q_mat.transpose() * sys.y_prime).norm() < 1e-10);
  }
}

TEST_CASE("quadratic forms differ by a constant over the alphabet") {
  Rng rng = make_rng(7);
  auto base = make_base_channel(4, 4, 0.1, 42, false);
  auto sys = make_instance(base, Constellation::qam16(), 14.0, 1, rng);
  auto vecs = all_vectors(sys.constellation, sys.m());
  Rng pick = make_rng(8);
  std::uniform_int_distribution<std::size_t> dist(0, vecs.size() - 1);
  double ref = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto& x = vecs[dist(pick)];
    const double full = (sys.y_prime - sys.H * x).squaredNorm();
    const double reduced = (sys.y - sys.R * x).squaredNorm();
    const double diff = full - reduced;
    if (i == 0) ref = diff;
    CHECK(diff == doctest::Approx(ref).epsilon(1e-8));
    CHECK(diff >= -1e-9);  // projection residual
  }
}

TEST_CASE("argmin equivalence of reduced and full metrics") {
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto base = make_base_channel(3, 3, 0.1, 500 + trial, false);
    auto sys = make_instance(base, Constellation::qpsk(), 8.0, trial + 1, rng);
    auto vecs = all_vectors(sys.constellation, sys.m());
    int best_full = 0, best_red = 0;
    double bf = 1e300, br = 1e300;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      const double f = (sys.y_prime - sys.H * vecs[i]).squaredNorm();
      const double r = (sys.y - sys.R * vecs[i]).squaredNorm();
      if (f < bf) { bf = f; best_full = static_cast<int>(i); }
      if (r < br) { br = r; best_red = static_cast<int>(i); }
    }
    CHECK(best_full == best_red);
  }
}

TEST_CASE("branch metric formula") {
  auto sys = toy_system();
  std::vector<double> empty;
  CHECK(branch_metric(sys, empty, 1.0) == doctest::Approx(0.0));  // (2-2*1)^2
  std::vector<double> one{1.0};
  CHECK(branch_metric(sys, one, 1.0) == doctest::Approx(0.25));  // (1-1-0.5)^2
}

TEST_CASE("path metric") {
  auto sys = toy_system();
  std::vector<double> empty;
  CHECK(path_metric(sys, empty) == 0.0);
  std::vector<double> full{1.0, 1.0};
  CHECK(path_metric(sys, full) == doctest::Approx(0.25));
  std::vector<double> bad{0.5};
  CHECK_THROWS_AS(path_metric(sys, bad), InvalidParameterError);
}

TEST_CASE("path metric matches the quadratic form on a random instance") {
  Rng rng = make_rng(12);
  auto base = make_base_channel(4, 4, 0.1, 9, false);
  auto sys = make_instance(base, Constellation::qpsk(), 10.0, 3, rng);
  REQUIRE(sys.m() == 8);
  for (const auto& x : all_vectors(sys.constellation, 8)) {
    // recovery order: symbols[j] = x_{m-j} (1-indexed)
    std::vector<double> rec;
    for (int j = 0; j < 8; ++j) rec.push_back(x(7 - j));
    CHECK(path_metric(sys, rec) ==
          doctest::Approx((sys.y - sys.R * x).squaredNorm()).epsilon(1e-9));
  }
}

TEST_CASE("noiseless instance has zero metrics along the truth") {
  Rng rng = make_rng(3);
  auto base = make_base_channel(2, 2, 0.1, 77, false);
  auto sys = make_instance(base, Constellation::qpsk(), 10.0, 2, rng);
  // Rebuild with the same channel and x_true, no noise.
  Eigen::VectorXcd xc(2);
  for (int i = 0; i < 2; ++i)
    xc(i) = std::complex<double>(sys.x_true(i), sys.x_true(2 + i));
  auto hc = generate_varying_channel(base, 2);
  RealSystem clean = to_real_system(hc, hc * xc, sys.sigma_w2,
                                    Constellation::qpsk());
  std::vector<double> rec;
  for (int j = 0; j < 4; ++j) {
    const double truth = sys.x_true(3 - j);
    CHECK(branch_metric(clean, rec, truth) == doctest::Approx(0.0));
    rec.push_back(truth);
  }
  CHECK(path_metric(clean, rec) == doctest::Approx(0.0));
}

TEST_CASE("snr to noise variance") {
  CHECK(snr_to_noise_variance(10.0, 8, 1.0) == doctest::Approx(0.8));
  CHECK(snr_to_noise_variance(0.0, 1, 1.0) == doctest::Approx(1.0));
  double prev = snr_to_noise_variance(0.0, 4, 2.0);
  for (double snr = 2.0; snr <= 40.0; snr += 2.0) {
    const double cur = snr_to_noise_variance(snr, 4, 2.0);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("instances are reproducible from equal rng state") {
  auto base = make_base_channel(4, 4, 0.1, 21, false);
  Rng a = make_rng(55), b = make_rng(55);
  auto s1 = make_instance(base, Constellation::qpsk(), 12.0, 4, a);
  auto s2 = make_instance(base, Constellation::qpsk(), 12.0, 4, b);
  CHECK(s1.H == s2.H);
  CHECK(s1.y_prime == s2.y_prime);
  CHECK(s1.x_true == s2.x_true);
}
