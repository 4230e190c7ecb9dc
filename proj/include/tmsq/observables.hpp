// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "tmsq/squeeze.hpp"

namespace tmsq {

/// State-quality metrics for a protocol endpoint or any two-mode state.
struct MetricsReport {
  double mean_n_a1 = 0, mean_n_a2 = 0;
  double mean_n_b1 = 0, mean_n_b2 = 0;
  double epr_variance = 0;
  double fidelity = 0;
  std::optional<double> log_negativity;
  double leakage = 0;
};

// Low-order moments evaluated by index arithmetic on the raw density
// matrix, so the hot loops never build embedded operators.
inline double occupation(const Matrix& rho, const HilbertSpec& spec, Factor mode) {
  double total = 0;
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 < spec.dim2(); ++n2)
      for (int s = 0; s < spec.dim_atom(); ++s) {
        long k = spec.index(n1, n2, s);
        total += (mode == Factor::mode1 ? n1 : n2) * rho(k, k).real();
      }
  return total;
}

inline cxd mean_lowering(const Matrix& rho, const HilbertSpec& spec, Factor mode) {
  cxd total = 0;  // Tr[a rho] = sum sqrt(n+1) rho(n, n+1) along the mode
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 < spec.dim2(); ++n2)
      for (int s = 0; s < spec.dim_atom(); ++s) {
        if (mode == Factor::mode1 && n1 + 1 < spec.dim1())
          total += std::sqrt(n1 + 1.0) * rho(spec.index(n1 + 1, n2, s), spec.index(n1, n2, s));
        if (mode == Factor::mode2 && n2 + 1 < spec.dim2())
          total += std::sqrt(n2 + 1.0) * rho(spec.index(n1, n2 + 1, s), spec.index(n1, n2, s));
      }
  return total;
}

inline cxd mean_pair_lowering(const Matrix& rho, const HilbertSpec& spec) {
  cxd total = 0;  // Tr[a1 a2 rho]
  for (int n1 = 0; n1 + 1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 + 1 < spec.dim2(); ++n2)
      for (int s = 0; s < spec.dim_atom(); ++s)
        total += std::sqrt(double(n1 + 1) * (n2 + 1)) *
                 rho(spec.index(n1 + 1, n2 + 1, s), spec.index(n1, n2, s));
  return total;
}

/// Var(X1 - X2) + Var(P1 + P2) with X = (a + a^dag)/sqrt(2); below 2
/// certifies inseparability, and a two-mode squeezed vacuum gives
/// 2 exp(-2r). In moment form:
///   2 (1 + <n1> + <n2>) - 4 Re<a1 a2> - <u>^2 - <v>^2.
inline double epr_variance_moments(double n1, double n2, cxd pair, cxd a1, cxd a2) {
  double u = std::sqrt(2.0) * (a1.real() - a2.real());
  double v = std::sqrt(2.0) * (a1.imag() + a2.imag());
  return 2.0 * (1.0 + n1 + n2) - 4.0 * pair.real() - u * u - v * v;
}

namespace detail {
// The quadrature normalization and the (X1-X2, P1+P2) combination are the
// classic place for silent factor-of-2 mistakes, so the convention is
// checked once at first use against the closed-form TMSV value.
inline void quadrature_convention_selftest() {
  static const bool ok = [] {
    HilbertSpec spec = HilbertSpec::modes(12, 12);
    const double r = 0.4;
    QuantumState tmsv = tmsv_state(r, spec);
    Matrix rho = tmsv.density_matrix();
    double epr = epr_variance_moments(
        occupation(rho, spec, Factor::mode1), occupation(rho, spec, Factor::mode2),
        mean_pair_lowering(rho, spec), mean_lowering(rho, spec, Factor::mode1),
        mean_lowering(rho, spec, Factor::mode2));
    double vac = epr_variance_moments(0, 0, 0, 0, 0);
    return std::abs(epr - 2.0 * std::exp(-2.0 * r)) < 1e-6 && std::abs(vac - 2.0) < 1e-12;
  }();
  if (!ok)
    throw NumericsError("quadrature convention self-test failed: EPR normalization is wrong");
}
}  // namespace detail

// Pure-state moment paths work on the amplitude vector directly, so a
// squeezed state at a few hundred levels per mode never materializes its
// density matrix.
inline double occupation(const Vector& psi, const HilbertSpec& spec, Factor mode) {
  double total = 0;
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 < spec.dim2(); ++n2)
      for (int s = 0; s < spec.dim_atom(); ++s)
        total += (mode == Factor::mode1 ? n1 : n2) * std::norm(psi(spec.index(n1, n2, s)));
  return total;
}

inline cxd mean_lowering(const Vector& psi, const HilbertSpec& spec, Factor mode) {
  cxd total = 0;  // <psi| a |psi>
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 < spec.dim2(); ++n2)
      for (int s = 0; s < spec.dim_atom(); ++s) {
        if (mode == Factor::mode1 && n1 + 1 < spec.dim1())
          total += std::sqrt(n1 + 1.0) * std::conj(psi(spec.index(n1, n2, s))) *
                   psi(spec.index(n1 + 1, n2, s));
        if (mode == Factor::mode2 && n2 + 1 < spec.dim2())
          total += std::sqrt(n2 + 1.0) * std::conj(psi(spec.index(n1, n2, s))) *
                   psi(spec.index(n1, n2 + 1, s));
      }
  return total;
}

inline cxd mean_pair_lowering(const Vector& psi, const HilbertSpec& spec) {
  cxd total = 0;  // <psi| a1 a2 |psi>
  for (int n1 = 0; n1 + 1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 + 1 < spec.dim2(); ++n2)
      for (int s = 0; s < spec.dim_atom(); ++s)
        total += std::sqrt(double(n1 + 1) * (n2 + 1)) * std::conj(psi(spec.index(n1, n2, s))) *
                 psi(spec.index(n1 + 1, n2 + 1, s));
  return total;
}

inline double mode_occupation(const QuantumState& state, Factor mode) {
  if (state.is_pure()) return occupation(state.vector(), state.spec(), mode);
  return occupation(state.density_matrix(), state.spec(), mode);
}

inline double epr_variance(const QuantumState& state) {
  if (state.basis() != Basis::a)
    throw ConfigError("epr_variance: defined on physical (a-basis) states");
  if (state.spec().include_atom) throw ConfigError("epr_variance: field-only states expected");
  detail::quadrature_convention_selftest();
  const HilbertSpec& spec = state.spec();
  if (state.is_pure()) {
    const Vector& psi = state.vector();
    return epr_variance_moments(occupation(psi, spec, Factor::mode1),
                                occupation(psi, spec, Factor::mode2),
                                mean_pair_lowering(psi, spec),
                                mean_lowering(psi, spec, Factor::mode1),
                                mean_lowering(psi, spec, Factor::mode2));
  }
  Matrix rho = state.density_matrix();
  return epr_variance_moments(occupation(rho, spec, Factor::mode1),
                              occupation(rho, spec, Factor::mode2), mean_pair_lowering(rho, spec),
                              mean_lowering(rho, spec, Factor::mode1),
                              mean_lowering(rho, spec, Factor::mode2));
}

/// <n> of one mode in the requested basis. A state labelled in the other
/// basis is transformed first, which needs the squeeze parameter (taken
/// from the state tag or passed explicitly).
inline double mean_photon(const QuantumState& state, Factor mode, Basis basis,
                          std::optional<double> r = {}, Diagnostics* diag = nullptr) {
  if (mode == Factor::atom) throw ConfigError("mean_photon: mode1 or mode2 expected");
  if (basis == state.basis()) return mode_occupation(state, mode);
  double r_use = r ? *r : state.squeeze_r();
  if (basis == Basis::b && !r && state.basis() == Basis::a && state.squeeze_r() == 0.0)
    throw ConfigError("mean_photon: b-basis request on an a-basis state needs the squeeze r");
  Direction dir = (state.basis() == Basis::a) ? Direction::a_to_b : Direction::b_to_a;
  return mode_occupation(basis_transform(state, r_use, dir, diag), mode);
}

/// Partial transpose on mode 2.
inline Matrix partial_transpose_mode2(const Matrix& rho, const HilbertSpec& spec) {
  if (spec.include_atom) throw ConfigError("partial_transpose: field-only states expected");
  Matrix out(rho.rows(), rho.cols());
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    for (int m1 = 0; m1 < spec.dim1(); ++m1)
      for (int n2 = 0; n2 < spec.dim2(); ++n2)
        for (int m2 = 0; m2 < spec.dim2(); ++m2)
          out(spec.index(n1, n2), spec.index(m1, m2)) = rho(spec.index(n1, m2), spec.index(m1, n2));
  return out;
}

/// Logarithmic negativity E_N = log2 || rho^T2 ||_1 from the full
/// truncated density matrix (no Gaussian shortcut; that formula is a
/// test oracle only).
inline double log_negativity(const QuantumState& state, Diagnostics* diag = nullptr) {
  if (state.spec().include_atom) throw ConfigError("log_negativity: field-only states expected");
  if (diag && state.leakage() > kLeakageThreshold)
    diag->flag_truncation("log_negativity: leakage " + std::to_string(state.leakage()) +
                          " makes the trace norm unreliable");
  Matrix pt = partial_transpose_mode2(state.density_matrix(), state.spec());
  Eigen::SelfAdjointEigenSolver<Matrix> es(pt, Eigen::EigenvaluesOnly);
  double trace_norm = es.eigenvalues().cwiseAbs().sum();
  return std::log2(trace_norm);
}

/// Nonnegative table P(n1, n2) summing to 1 - leakage (a-basis diagnostic
/// for the |n,n> correlation of the squeezed target).
inline Eigen::MatrixXd joint_photon_distribution(const QuantumState& state) {
  if (state.basis() != Basis::a)
    throw ConfigError("joint_photon_distribution: a-basis states expected");
  return state.joint_number_distribution();
}

/// Full metrics for a two-mode state against the squeezed target of
/// parameter r: occupations in both bases, EPR variance, fidelity to
/// |0,0>_b, and (below the dimension gate, where the eigensolve is
/// affordable) the logarithmic negativity.
inline MetricsReport compute_metrics(const QuantumState& state, double r,
                                     Diagnostics* diag = nullptr, long log_neg_dim_gate = 512) {
  if (state.spec().include_atom) throw ConfigError("compute_metrics: field-only states expected");
  MetricsReport m;
  m.leakage = state.leakage();
  if (diag && m.leakage > kLeakageThreshold)
    diag->flag_truncation("compute_metrics: leakage " + std::to_string(m.leakage));

  const QuantumState& in_b =
      (state.basis() == Basis::b) ? state : basis_transform(state, r, Direction::a_to_b, diag);
  QuantumState in_a =
      (state.basis() == Basis::a) ? state : basis_transform(state, r, Direction::b_to_a, diag);
  m.mean_n_b1 = mode_occupation(in_b, Factor::mode1);
  m.mean_n_b2 = mode_occupation(in_b, Factor::mode2);
  m.mean_n_a1 = mode_occupation(in_a, Factor::mode1);
  m.mean_n_a2 = mode_occupation(in_a, Factor::mode2);
  m.fidelity = fidelity(in_b, vacuum_state(state.spec(), Basis::b, r));
  m.epr_variance = epr_variance(in_a);
  if (state.spec().dim() <= log_neg_dim_gate) m.log_negativity = log_negativity(in_a, diag);
  return m;
}

}  // namespace tmsq
