#include "latentline/linalg.hpp"

#include <cmath>

namespace latentline {

SpdFactor::SpdFactor(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::logic_error("SpdFactor: matrix is not square");
  if (a.rows() == 0) {
    llt_.compute(a);
    return;
  }
  llt_.compute(a);
  if (llt_.info() == Eigen::Success && a.allFinite()) return;
  if (!a.allFinite()) throw NumericalError("SPD factorization: non-finite matrix");
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    Matrix loaded = a;
    loaded.diagonal().array() += jitter;
    llt_.compute(loaded);
    if (llt_.info() == Eigen::Success) {
      jitter_ = jitter;
      return;
    }
  }
  throw NumericalError("SPD factorization failed after jitter escalation");
}

Matrix SpdFactor::inverse() const {
  const auto n = llt_.matrixLLT().rows();
  const Matrix l_inv = llt_.matrixL().solve(Matrix::Identity(n, n));
  Matrix out = Matrix::Zero(n, n);
  out.selfadjointView<Eigen::Lower>().rankUpdate(l_inv.transpose());
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Matrix SpdFactor::solve(const Matrix& b) const { return llt_.solve(b); }

double SpdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double spd_log_det(const Matrix& a) { return SpdFactor(a).log_det(); }

}  // namespace latentline
