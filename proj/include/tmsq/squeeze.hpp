// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>

#include "tmsq/expm.hpp"
#include "tmsq/state.hpp"

namespace tmsq {

/// Two-mode squeeze unitary S(r) = exp(r (a1 a2 - a1^dag a2^dag)), r >= 0.
///
/// The generator conserves n1 - n2, so the exponential is assembled from
/// the exponentials of the tridiagonal blocks of fixed n1 - n2. Each
/// truncated block generator is exactly antihermitian, so the assembled
/// matrix is unitary to machine precision at any cutoff.
inline Operator squeeze_op(double r, const HilbertSpec& spec, Diagnostics* diag = nullptr) {
  if (r < 0) throw RegimeError("squeeze_op: r must be >= 0 (real phase convention)");
  const HilbertSpec field = spec.without_atom();
  const int d1 = field.dim1(), d2 = field.dim2();
  Matrix s_field = Matrix::Zero(field.dim(), field.dim());

  for (int q = -field.n_max2; q <= field.n_max1; ++q) {
    const int lo = std::max(0, -q);
    const int hi = std::min(field.n_max2, field.n_max1 - q);
    if (hi < lo) continue;
    const int len = hi - lo + 1;
    Matrix block = Matrix::Zero(len, len);
    for (int m = lo + 1; m <= hi; ++m) {
      double c = r * std::sqrt(static_cast<double>(m) * (m + q));
      block(m - 1 - lo, m - lo) = c;   // from a1 a2
      block(m - lo, m - 1 - lo) = -c;  // from -(a1 a2)^dag
    }
    Matrix eblock = matrix_exp(block, diag);
    for (int mm = 0; mm < len; ++mm)
      for (int nn = 0; nn < len; ++nn)
        s_field(static_cast<long>((mm + lo + q)) * d2 + (mm + lo),
                static_cast<long>((nn + lo + q)) * d2 + (nn + lo)) = eblock(mm, nn);
  }

  // Series weight the squeeze pushes past the cutoff when acting near vacuum.
  double min_dim = std::min(d1, d2);
  double tail = std::pow(std::tanh(r), 2.0 * min_dim);
  if (diag && tail > kLeakageThreshold)
    diag->flag_truncation("squeeze_op: TMSV tail beyond cutoff ~" + std::to_string(tail) +
                          " exceeds leakage threshold; increase n_max");

  if (!spec.include_atom) return Operator(field, std::move(s_field));
  return Operator(spec, kron(s_field, Matrix::Identity(2, 2)));
}

/// Two-mode squeezed vacuum S^dag(r)|0,0> built from its closed-form
/// series sech(r) tanh(r)^n |n,n>, renormalized after truncation.
/// Labelled in the "a" basis; this is the protocol's target state.
inline QuantumState tmsv_state(double r, const HilbertSpec& spec) {
  if (r < 0) throw RegimeError("tmsv_state: r must be >= 0");
  if (spec.include_atom) throw ConfigError("tmsv_state: field-only spec expected");
  const int n_top = std::min(spec.n_max1, spec.n_max2);
  const double th = std::tanh(r), sech = 1.0 / std::cosh(r);
  Vector psi = Vector::Zero(spec.dim());
  double captured = 0.0;
  for (int n = 0; n <= n_top; ++n) {
    double amp = sech * std::pow(th, n);
    psi(spec.index(n, n)) = amp;
    captured += amp * amp;
  }
  if (captured < 1.0 - 1e-6)
    throw NumericsError("tmsv_state: truncated series captures only " + std::to_string(captured) +
                        " of the norm; raise the cutoffs for r = " + std::to_string(r));
  psi /= std::sqrt(captured);
  return QuantumState::pure(spec, Basis::a, std::move(psi));
}

enum class Direction { a_to_b, b_to_a };

/// Change of Fock labelling between the physical modes and the
/// Bogoliubov modes of squeeze parameter r:
///   |n1,n2>_a = S(r) |n1,n2>_b, hence psi_b = S psi_a and psi_a = S^dag psi_b.
inline QuantumState basis_transform(const QuantumState& state, double r, Direction dir,
                                    Diagnostics* diag = nullptr) {
  if (dir == Direction::a_to_b && state.basis() != Basis::a)
    throw ConfigError("basis_transform: a->b requested but state is not a-labelled");
  if (dir == Direction::b_to_a && state.basis() != Basis::b)
    throw ConfigError("basis_transform: b->a requested but state is not b-labelled");

  Operator s = squeeze_op(r, state.spec(), diag);
  const Matrix& u = s.mat;
  QuantumState out =
      (dir == Direction::a_to_b)
          ? (state.is_pure()
                 ? QuantumState::pure(state.spec(), Basis::b, u * state.vector(), r)
                 : QuantumState::density(state.spec(), Basis::b,
                                         u * state.density_matrix() * u.adjoint(), r))
          : (state.is_pure()
                 ? QuantumState::pure(state.spec(), Basis::a, u.adjoint() * state.vector())
                 : QuantumState::density(state.spec(), Basis::a,
                                         u.adjoint() * state.density_matrix() * u));

  double leak = out.leakage();
  if (diag && leak > kLeakageThreshold)
    diag->flag_truncation("basis_transform: top-level population " + std::to_string(leak) +
                          " after transform; state occupies squeezed sectors beyond cutoff");
  return out;
}

}  // namespace tmsq
