// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tmsq/lindblad.hpp"

namespace tmsq {

// Reduced b-basis representation used when the joint density matrix would
// not fit in memory (mu close to 1 needs ~200 levels per mode). Under the
// reservoir damping generator the joint number distribution P(n1, n2) obeys
// a closed birth-death equation, and the low-order coherence moments obey
// closed scalar equations:
//   during step j:  dP/ds = (nj+1) P(..nj+1..) - nj P,
//                   d<b_j>/ds = -<b_j>/2,  d<b1 b2>/ds = -<b1 b2>/2,
// with s = gamma t. This captures every reported observable (occupations,
// fidelity to |0,0>_b = P(0,0), joint distribution, EPR moments) exactly;
// it is not a general-purpose state.
struct DiagonalState {
  Eigen::MatrixXd p;  // joint number distribution, p(n1, n2)
  cxd m1{0, 0};       // <b1>
  cxd m2{0, 0};       // <b2>
  cxd m12{0, 0};      // <b1 b2>

  double occupation(Factor mode) const {
    double total = 0;
    for (int n1 = 0; n1 < p.rows(); ++n1)
      for (int n2 = 0; n2 < p.cols(); ++n2)
        total += (mode == Factor::mode1 ? n1 : n2) * p(n1, n2);
    return total;
  }
  double leakage() const {
    return std::max(p.row(p.rows() - 1).sum(), p.col(p.cols() - 1).sum());
  }
};

/// Initial reduced state from any materialized b-basis state.
inline DiagonalState diagonal_from_state(const QuantumState& state) {
  DiagonalState d;
  d.p = state.joint_number_distribution();
  const HilbertSpec& spec = state.spec();
  Matrix rho = state.density_matrix();
  d.m1 = (mode_annihilation(Factor::mode1, spec).mat * rho).trace();
  d.m2 = (mode_annihilation(Factor::mode2, spec).mat * rho).trace();
  for (int n1 = 0; n1 + 1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 + 1 < spec.dim2(); ++n2)
      d.m12 += std::sqrt(double(n1 + 1) * (n2 + 1)) *
               rho(spec.index(n1 + 1, n2 + 1), spec.index(n1, n2));
  return d;
}

/// Reduced b-basis representation of the physical vacuum, built from the
/// closed-form series S|0,0>_a = sech(r) sum (-tanh r)^n |n,n>_b.
inline DiagonalState diagonal_vacuum_start(double r, int n_max, Diagnostics* diag = nullptr) {
  DiagonalState d;
  d.p = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  const double th = std::tanh(r), sech = 1.0 / std::cosh(r);
  std::vector<double> amp(n_max + 1);
  double norm2 = 0;
  for (int n = 0; n <= n_max; ++n) {
    amp[n] = sech * std::pow(-th, n);
    norm2 += amp[n] * amp[n];
  }
  if (1.0 - norm2 > 1e-4)
    throw NumericsError("diagonal_vacuum_start: cutoff captures only " + std::to_string(norm2) +
                        " of the norm");
  if (diag && 1.0 - norm2 > kLeakageThreshold)
    diag->flag_truncation("diagonal_vacuum_start: discarded series weight " +
                          std::to_string(1.0 - norm2));
  double inv = 1.0 / std::sqrt(norm2);
  for (int n = 0; n <= n_max; ++n) amp[n] *= inv;
  for (int n = 0; n <= n_max; ++n) d.p(n, n) = amp[n] * amp[n];
  for (int n = 0; n + 1 <= n_max; ++n) d.m12 += amp[n] * amp[n + 1] * (n + 1);
  return d;
}

/// Integrate the reduced equations while mode `damped` is coupled to the
/// reservoir. Dimensionless time s = gamma t; observer runs at each stop.
inline void evolve_diagonal(DiagonalState& state, Factor damped, const std::vector<double>& stops,
                            const std::function<void(const DiagonalState&, double)>& observe,
                            const IntegratorOptions& opt = {}) {
  const int rows = static_cast<int>(state.p.rows());
  const int cols = static_cast<int>(state.p.cols());
  const long np = static_cast<long>(rows) * cols;

  std::vector<double> x(np + 6);
  Eigen::Map<Eigen::MatrixXd>(x.data(), rows, cols) = state.p;
  x[np + 0] = state.m1.real();
  x[np + 1] = state.m1.imag();
  x[np + 2] = state.m2.real();
  x[np + 3] = state.m2.imag();
  x[np + 4] = state.m12.real();
  x[np + 5] = state.m12.imag();

  auto rhs = [&](const std::vector<double>& y, std::vector<double>& dydt, double) {
    dydt.assign(y.size(), 0.0);
    auto p = Eigen::Map<const Eigen::MatrixXd>(y.data(), rows, cols);
    auto dp = Eigen::Map<Eigen::MatrixXd>(dydt.data(), rows, cols);
    if (damped == Factor::mode1) {
      for (int n1 = 0; n1 < rows; ++n1)
        for (int n2 = 0; n2 < cols; ++n2) {
          double gain = (n1 + 1 < rows) ? (n1 + 1) * p(n1 + 1, n2) : 0.0;
          dp(n1, n2) = gain - n1 * p(n1, n2);
        }
    } else {
      for (int n1 = 0; n1 < rows; ++n1)
        for (int n2 = 0; n2 < cols; ++n2) {
          double gain = (n2 + 1 < cols) ? (n2 + 1) * p(n1, n2 + 1) : 0.0;
          dp(n1, n2) = gain - n2 * p(n1, n2);
        }
    }
    int damped_moment = (damped == Factor::mode1) ? 0 : 2;
    dydt[np + damped_moment] = -0.5 * y[np + damped_moment];
    dydt[np + damped_moment + 1] = -0.5 * y[np + damped_moment + 1];
    dydt[np + 4] = -0.5 * y[np + 4];
    dydt[np + 5] = -0.5 * y[np + 5];
  };

  auto unpack = [&](const std::vector<double>& y) {
    DiagonalState out;
    out.p = Eigen::Map<const Eigen::MatrixXd>(y.data(), rows, cols);
    out.m1 = cxd(y[np + 0], y[np + 1]);
    out.m2 = cxd(y[np + 2], y[np + 3]);
    out.m12 = cxd(y[np + 4], y[np + 5]);
    return out;
  };

  integrate_checked(
      rhs, x, 0.0, stops,
      [&](const std::vector<double>& y, double s) {
        DiagonalState snap = unpack(y);
        double mass = snap.p.sum();
        if (std::abs(mass - state.p.sum()) > 1e-8 * std::max(1.0, s))
          throw NumericsError("diagonal engine: probability drift at s = " + std::to_string(s));
        observe(snap, s);
      },
      opt);
  state = unpack(x);
}

}  // namespace tmsq
