#pragma once

#include <string>
#include <vector>

namespace mimo {

// PAM alphabet Q plus bookkeeping for the QAM alphabet it induces.
// pam_levels are the raw integer grid ({-1,+1}, {-3,-1,+1,+3}, ...);
// symbol_energy is the mean complex-symbol energy of the induced QAM
// alphabet (or the mean real energy for BPSK, which has no imaginary part).
struct Constellation {
  std::vector<double> pam_levels;
  std::string modulation_name;
  double symbol_energy = 0.0;
  bool real_valued = false;  // BPSK: real channel, m = N_T

  static Constellation bpsk();
  static Constellation qpsk();
  static Constellation qam16();
  static Constellation from_name(const std::string& name);

  int order() const { return static_cast<int>(pam_levels.size()); }

  // Nearest PAM level; ties broken toward the smaller level.
  double slice(double v) const;

  bool contains(double v, double tol = 1e-9) const;
};

}  // namespace mimo
