// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include "tmsq/common.hpp"

namespace tmsq {

/// Dense matrix exponential (scaling-and-squaring underneath) with a
/// convergence self-check: the result is recomputed through one extra
/// squaring level, exp(A) vs exp(A/2)^2, and the two must agree to
/// 1e-12 relative in max norm. Disagreement is reported, not hidden.
inline Matrix matrix_exp(const Matrix& a, Diagnostics* diag = nullptr) {
  Matrix full = a.exp();
  Matrix half = (0.5 * a).exp();
  Matrix resquared = half * half;
  double scale = std::max(1.0, full.cwiseAbs().maxCoeff());
  double drift = (full - resquared).cwiseAbs().maxCoeff() / scale;
  if (drift > 1e-12)
    warn_into(diag, "matrix_exp: self-check drift " + std::to_string(drift) +
                        " exceeds 1e-12; exponential may be ill-conditioned");
  return full;
}

/// exp(-i H t) for Hermitian H (the only unitaries the engines build).
inline Matrix evolution_op(const Matrix& hamiltonian, double t, Diagnostics* diag = nullptr) {
  return matrix_exp(cxd(0.0, -t) * hamiltonian, diag);
}

}  // namespace tmsq
