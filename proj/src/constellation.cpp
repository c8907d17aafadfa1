#include "mimo/constellation.hpp"

#include <cmath>

#include "mimo/common.hpp"

namespace mimo {

namespace {

double mean_qam_energy(const std::vector<double>& pam) {
  // mean of a^2 + b^2 over the square QAM alphabet built from pam
  double e = 0.0;
  for (double a : pam)
    for (double b : pam) e += a * a + b * b;
  return e / static_cast<double>(pam.size() * pam.size());
}

}  // namespace

Constellation Constellation::bpsk() {
  Constellation c;
  c.pam_levels = {-1.0, 1.0};
  c.modulation_name = "BPSK";
  c.symbol_energy = 1.0;
  c.real_valued = true;
  return c;
}

Constellation Constellation::qpsk() {
  Constellation c;
  c.pam_levels = {-1.0, 1.0};
  c.modulation_name = "QPSK";
  c.symbol_energy = mean_qam_energy(c.pam_levels);
  return c;
}

Constellation Constellation::qam16() {
  Constellation c;
  c.pam_levels = {-3.0, -1.0, 1.0, 3.0};
  c.modulation_name = "16QAM";
  c.symbol_energy = mean_qam_energy(c.pam_levels);
  return c;
}

Constellation Constellation::from_name(const std::string& name) {
  if (name == "BPSK" || name == "bpsk") return bpsk();
  if (name == "QPSK" || name == "qpsk") return qpsk();
  if (name == "16QAM" || name == "16qam" || name == "qam16") return qam16();
  throw InvalidParameterError("unknown modulation: " + name);
}

double Constellation::slice(double v) const {
  double best = pam_levels.front();
  double best_dist = std::abs(v - best);
  for (std::size_t i = 1; i < pam_levels.size(); ++i) {
    double d = std::abs(v - pam_levels[i]);
    if (d < best_dist) {  // strict: ties stay with the smaller level
      best_dist = d;
      best = pam_levels[i];
    }
  }
  return best;
}

bool Constellation::contains(double v, double tol) const {
  for (double q : pam_levels)
    if (std::abs(v - q) <= tol) return true;
  return false;
}

}  // namespace mimo
