#pragma once

#include "latentline/core.hpp"

namespace latentline {

/// Cholesky of a symmetric positive-definite matrix. On failure the diagonal
/// is loaded with jitter 1e-10, 1e-9, ..., 1e-6 before giving up with a
/// NumericalError.
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix& a);

  Matrix inverse() const;
  Matrix solve(const Matrix& b) const;
  double log_det() const;
  double jitter() const { return jitter_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

/// Log-determinant of an SPD matrix (via SpdFactor).
double spd_log_det(const Matrix& a);

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace latentline
