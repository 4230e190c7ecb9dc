// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "tmsq/hilbert.hpp"
#include "tmsq/state.hpp"

namespace tmsq {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  double initial_dt = 1e-3;
  int max_step_trials = 80;
};

/// Adaptive Runge-Kutta driver with explicit step-control exhaustion
/// handling. Integrates to each stop time exactly and invokes the
/// observer there; boost's own loop would spin forever on a step the
/// controller keeps rejecting.
template <typename State, typename Rhs, typename Observer>
void integrate_checked(Rhs rhs, State& state, double t0, const std::vector<double>& stops,
                       Observer observe, const IntegratorOptions& opt = {}) {
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol,
                                      ode::runge_kutta_fehlberg78<State>());
  double t = t0;
  double dt = opt.initial_dt;
  for (double stop : stops) {
    if (stop < t - 1e-15) throw ConfigError("integrate_checked: stops must be nondecreasing");
    while (t < stop) {
      double step = std::min(dt, stop - t);
      int trials = 0;
      while (stepper.try_step(rhs, state, t, step) == ode::fail) {
        if (++trials > opt.max_step_trials)
          throw NumericsError("integrator: step control exhausted at t = " + std::to_string(t));
      }
      // try_step grows `step` on success; keep it as the next proposal.
      dt = step;
    }
    observe(state, stop);
  }
}

using ComplexField = std::vector<cxd>;

inline ComplexField flatten(const Matrix& m) {
  return ComplexField(m.data(), m.data() + m.size());
}
inline Eigen::Map<const Matrix> as_matrix(const ComplexField& v, long dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

/// Single-mode damping generator for an arbitrary jump operator B,
/// in dimensionless time s = gamma t:
///   d rho / ds = -(1/2)(B^dag B rho - 2 B rho B^dag + rho B^dag B).
class LindbladGenerator {
 public:
  explicit LindbladGenerator(Matrix jump)
      : b_(std::move(jump)), n_(b_.adjoint() * b_), dim_(b_.rows()) {}

  void operator()(const ComplexField& x, ComplexField& dxdt, double /*s*/) const {
    auto rho = as_matrix(x, dim_);
    dxdt.resize(x.size());
    Eigen::Map<Matrix> out(dxdt.data(), dim_, dim_);
    out.noalias() = b_ * rho * b_.adjoint();
    out.noalias() -= 0.5 * (n_ * rho + rho * n_);
  }

  long dim() const { return dim_; }

 private:
  Matrix b_, n_;
  long dim_;
};

/// Same generator specialized to a single-mode lowering jump, evaluated
/// by index arithmetic in O(dim^2); the dense triple product would cost
/// O(dim^3) per stage and dominates everything at protocol cutoffs.
class ModeDampingGenerator {
 public:
  ModeDampingGenerator(const HilbertSpec& spec, Factor mode) : dim_(spec.dim()) {
    if (spec.include_atom) throw ConfigError("ModeDampingGenerator: field-only spec expected");
    occ_.resize(dim_);
    up_.resize(dim_);
    const int d2 = spec.dim2();
    for (int n1 = 0; n1 < spec.dim1(); ++n1)
      for (int n2 = 0; n2 < spec.dim2(); ++n2) {
        long k = spec.index(n1, n2);
        int n = (mode == Factor::mode1) ? n1 : n2;
        bool has_up = (mode == Factor::mode1) ? (n1 + 1 < spec.dim1()) : (n2 + 1 < spec.dim2());
        occ_[k] = n;
        up_[k] = has_up ? (mode == Factor::mode1 ? k + d2 : k + 1) : -1;
      }
  }

  void operator()(const ComplexField& x, ComplexField& dxdt, double /*s*/) const {
    auto rho = as_matrix(x, dim_);
    dxdt.resize(x.size());
    Eigen::Map<Matrix> out(dxdt.data(), dim_, dim_);
    for (long j = 0; j < dim_; ++j)
      for (long i = 0; i < dim_; ++i) {
        cxd gain = (up_[i] >= 0 && up_[j] >= 0)
                       ? std::sqrt(double(occ_[i] + 1) * (occ_[j] + 1)) * rho(up_[i], up_[j])
                       : cxd(0, 0);
        out(i, j) = gain - 0.5 * (occ_[i] + occ_[j]) * rho(i, j);
      }
  }

  long dim() const { return dim_; }

 private:
  long dim_;
  std::vector<int> occ_;
  std::vector<long> up_;
};

/// Solve the damping master equation with observer calls at each
/// requested dimensionless time s = gamma t in `stops`.
template <typename Gen>
void lindblad_integrate(Matrix& rho, Gen gen, const std::vector<double>& stops,
                        const std::function<void(const Matrix&, double)>& observe,
                        const IntegratorOptions& opt = {}) {
  ComplexField x = flatten(rho);
  double trace0 = as_matrix(x, gen.dim()).trace().real();
  integrate_checked(
      gen, x, 0.0, stops,
      [&](const ComplexField& state, double s) {
        auto m = as_matrix(state, gen.dim());
        double drift = std::abs(m.trace().real() - trace0);
        if (drift > 1e-8 * std::max(1.0, s))
          throw NumericsError("lindblad: trace drift " + std::to_string(drift) +
                              " at gamma*t = " + std::to_string(s));
        observe(m, s);
      },
      opt);
  rho = as_matrix(x, gen.dim());
  rho = 0.5 * (rho + rho.adjoint().eval());
}

/// General-jump form (used for conjugated jump operators in the a basis).
inline void lindblad_evolve_observed(
    Matrix& rho, const Matrix& jump, const std::vector<double>& stops,
    const std::function<void(const Matrix&, double)>& observe, const IntegratorOptions& opt = {}) {
  lindblad_integrate(rho, LindbladGenerator(jump), stops, observe, opt);
}

/// Mode-lowering form (the b-basis engines).
inline void lindblad_evolve_mode_observed(
    Matrix& rho, const HilbertSpec& spec, Factor mode, const std::vector<double>& stops,
    const std::function<void(const Matrix&, double)>& observe, const IntegratorOptions& opt = {}) {
  lindblad_integrate(rho, ModeDampingGenerator(spec, mode), stops, observe, opt);
}

/// Spec-facing form: evolve a b-basis state under the step-j master
/// equation for physical time t.
inline QuantumState lindblad_evolve(const QuantumState& rho0, double gamma, Factor mode, double t,
                                    const IntegratorOptions& opt = {}, Diagnostics* diag = nullptr) {
  if (gamma <= 0) throw RegimeError("lindblad_evolve: gamma must be > 0");
  if (t < 0) throw RegimeError("lindblad_evolve: t must be >= 0");
  if (rho0.basis() != Basis::b)
    throw ConfigError("lindblad_evolve: the reservoir damping generator acts on b-basis states");
  if (rho0.spec().include_atom) throw ConfigError("lindblad_evolve: field-only states expected");

  Matrix rho = rho0.density_matrix();
  if (t > 0)
    lindblad_evolve_mode_observed(rho, rho0.spec(), mode, {gamma * t},
                                  [](const Matrix&, double) {}, opt);
  QuantumState out = QuantumState::density(rho0.spec(), Basis::b, std::move(rho), rho0.squeeze_r());
  if (diag && out.leakage() > kLeakageThreshold)
    diag->flag_truncation("lindblad_evolve: top-level population " + std::to_string(out.leakage()));
  return out;
}

}  // namespace tmsq
