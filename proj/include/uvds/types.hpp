#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "uvds/error.hpp"

namespace uvds {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Class labels; contiguous 1..C after dataset relabeling.
using Labels = std::vector<int>;

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) fail(ErrorKind::NonFinite, what + " has NaN/Inf entries");
}

inline void require_finite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) fail(ErrorKind::NonFinite, what + " has NaN/Inf entries");
}

}  // namespace uvds
