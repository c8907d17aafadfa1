#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mimo/signal_model.hpp"

namespace mimo {

// Exact ML detection by depth-first enumeration with branch-and-bound
// pruning on the partial metric. Identical output to plain enumeration.
// Throws CapacityError when |Q|^m exceeds search_cap.
Eigen::VectorXd detect_ml(const RealSystem& sys,
                          std::uint64_t search_cap = 1ULL << 20);

// Regularized pseudo-inverse filter followed by per-component slicing.
// Regularization ratio uses per-real-dimension variances.
Eigen::VectorXd detect_mmse(const RealSystem& sys);

}  // namespace mimo
