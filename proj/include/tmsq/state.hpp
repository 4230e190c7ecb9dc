// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <utility>

#include "tmsq/hilbert.hpp"

namespace tmsq {

/// Which mode operators the Fock labels of a state refer to:
/// "a" = physical cavity modes, "b" = Bogoliubov modes of a two-mode
/// squeeze with parameter r (carried alongside the tag).
enum class Basis { a, b };

inline const char* basis_name(Basis b) { return b == Basis::a ? "a" : "b"; }

class QuantumState {
 public:
  static QuantumState pure(HilbertSpec spec, Basis basis, Vector psi, double squeeze_r = 0.0) {
    if (psi.size() != spec.dim()) throw ConfigError("QuantumState: vector does not match spec");
    double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-10)
      throw NumericsError("QuantumState: pure state norm " + std::to_string(norm) +
                          " deviates from 1 beyond 1e-10");
    return QuantumState(spec, basis, std::move(psi), {}, squeeze_r);
  }

  static QuantumState density(HilbertSpec spec, Basis basis, Matrix rho, double squeeze_r = 0.0) {
    if (rho.rows() != spec.dim() || rho.cols() != spec.dim())
      throw ConfigError("QuantumState: density matrix does not match spec");
    double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10)
      throw NumericsError("QuantumState: density matrix non-Hermitian by " + std::to_string(herm));
    double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-10)
      throw NumericsError("QuantumState: trace " + std::to_string(tr) + " deviates from 1");
    return QuantumState(spec, basis, {}, std::move(rho), squeeze_r);
  }

  const HilbertSpec& spec() const { return spec_; }
  Basis basis() const { return basis_; }
  double squeeze_r() const { return squeeze_r_; }
  bool is_pure() const { return psi_.has_value(); }

  const Vector& vector() const {
    if (!psi_) throw ConfigError("QuantumState: not stored as a pure state");
    return *psi_;
  }

  /// Density matrix view; materializes |psi><psi| for pure states.
  Matrix density_matrix() const {
    if (psi_) return (*psi_) * psi_->adjoint();
    return *rho_;
  }

  double expectation(const Operator& op) const {
    if (op.spec != spec_) throw ConfigError("expectation: operator acts on a different spec");
    if (psi_) return (psi_->adjoint() * op.mat * (*psi_))(0, 0).real();
    return (op.mat * (*rho_)).trace().real();
  }

  cxd expectation_c(const Operator& op) const {
    if (op.spec != spec_) throw ConfigError("expectation: operator acts on a different spec");
    if (psi_) return (psi_->adjoint() * op.mat * (*psi_))(0, 0);
    return (op.mat * (*rho_)).trace();
  }

  /// Joint photon-number distribution P(n1, n2) (atom traced out if present).
  Eigen::MatrixXd joint_number_distribution() const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(spec_.dim1(), spec_.dim2());
    for (int n1 = 0; n1 < spec_.dim1(); ++n1)
      for (int n2 = 0; n2 < spec_.dim2(); ++n2)
        for (int s = 0; s < spec_.dim_atom(); ++s) {
          long k = spec_.index(n1, n2, s);
          p(n1, n2) += psi_ ? std::norm((*psi_)(k)) : (*rho_)(k, k).real();
        }
    return p;
  }

  /// Largest population sitting in the top Fock level of either mode.
  double leakage() const {
    Eigen::MatrixXd p = joint_number_distribution();
    return std::max(p.row(spec_.dim1() - 1).sum(), p.col(spec_.dim2() - 1).sum());
  }

  /// Full eigenvalue check; too costly to run on every construction.
  void validate_positive(double tol = 1e-8) const {
    if (psi_) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(*rho_, Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -tol)
      throw NumericsError("QuantumState: negative eigenvalue " + std::to_string(min_eig));
  }

 private:
  QuantumState(HilbertSpec spec, Basis basis, std::optional<Vector> psi, std::optional<Matrix> rho,
               double squeeze_r)
      : spec_(spec), basis_(basis), psi_(std::move(psi)), rho_(std::move(rho)), squeeze_r_(squeeze_r) {}

  HilbertSpec spec_;
  Basis basis_;
  std::optional<Vector> psi_;
  std::optional<Matrix> rho_;
  double squeeze_r_ = 0.0;
};

inline QuantumState vacuum_state(const HilbertSpec& spec, Basis basis = Basis::a,
                                 double squeeze_r = 0.0) {
  Vector psi = Vector::Zero(spec.dim());
  psi(spec.index(0, 0, 0)) = 1.0;
  return QuantumState::pure(spec, basis, std::move(psi), squeeze_r);
}

inline QuantumState fock_state(const HilbertSpec& spec, int n1, int n2, Basis basis = Basis::a,
                               double squeeze_r = 0.0) {
  if (n1 > spec.n_max1 || n2 > spec.n_max2) throw ConfigError("fock_state: level beyond cutoff");
  Vector psi = Vector::Zero(spec.dim());
  psi(spec.index(n1, n2, 0)) = 1.0;
  return QuantumState::pure(spec, basis, std::move(psi), squeeze_r);
}

/// Product of single-mode thermal states with mean occupation n_bar each
/// (renormalized after truncation).
inline QuantumState thermal_state(const HilbertSpec& spec, double n_bar, Basis basis = Basis::a,
                                  double squeeze_r = 0.0) {
  if (n_bar < 0) throw RegimeError("thermal_state: negative occupation");
  auto weights = [n_bar](int dim) {
    Eigen::VectorXd w(dim);
    double lambda = n_bar / (1.0 + n_bar);
    for (int n = 0; n < dim; ++n) w(n) = std::pow(lambda, n);
    w /= w.sum();
    return w;
  };
  Eigen::VectorXd w1 = weights(spec.dim1()), w2 = weights(spec.dim2());
  Matrix rho = Matrix::Zero(spec.dim(), spec.dim());
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    for (int n2 = 0; n2 < spec.dim2(); ++n2) {
      long k = spec.index(n1, n2, 0);
      rho(k, k) = w1(n1) * w2(n2);
    }
  if (spec.include_atom) throw ConfigError("thermal_state: field-only spec expected");
  return QuantumState::density(spec, basis, std::move(rho), squeeze_r);
}

/// <psi| rho |psi> for a pure target.
inline double fidelity(const QuantumState& state, const QuantumState& target) {
  if (!target.is_pure()) throw ConfigError("fidelity: target must be pure");
  if (state.spec() != target.spec()) throw ConfigError("fidelity: spec mismatch");
  if (state.basis() != target.basis())
    throw ConfigError("fidelity: states are labelled in different bases");
  if (state.is_pure()) {
    cxd ov = (target.vector().adjoint() * state.vector())(0, 0);
    return std::norm(ov);
  }
  return (target.vector().adjoint() * state.density_matrix() * target.vector())(0, 0).real();
}

inline double trace_distance(const Matrix& rho, const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho - sigma, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace tmsq
