// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "tmsq/expm.hpp"
#include "tmsq/hamiltonian.hpp"
#include "tmsq/state.hpp"

namespace tmsq {

enum class AtomState { plus, minus };

inline Vector atom_vector(AtomState s) {
  Vector v = Vector::Zero(2);
  v(s == AtomState::plus ? 0 : 1) = 1.0;
  return v;
}

/// One complete atom transit: couple the field to a fresh atom in
/// |psi_at>, evolve under H for the interaction time tau, trace the atom
/// out. rho lives on the field-only spec, H on the same spec with atom.
inline QuantumState kick_map(const QuantumState& rho, AtomState atom, const Operator& h,
                             double tau, Diagnostics* diag = nullptr) {
  if (rho.spec().include_atom) throw ConfigError("kick_map: field state must not carry an atom");
  if (!h.spec.include_atom || h.spec.without_atom() != rho.spec())
    throw ConfigError("kick_map: Hamiltonian spec must be the field spec plus the atom");

  Matrix u = evolution_op(h.mat, tau, diag);
  Matrix rho_tot = kron(rho.density_matrix(), atom_vector(atom) * atom_vector(atom).adjoint());
  Matrix evolved = u * rho_tot * u.adjoint();
  Matrix reduced = partial_trace_atom(evolved, h.spec);

  double tr = reduced.trace().real();
  if (std::abs(tr - 1.0) > 1e-10)
    throw NumericsError("kick_map: trace drift " + std::to_string(tr - 1.0));
  reduced = 0.5 * (reduced + reduced.adjoint().eval());  // scrub roundoff asymmetry

  QuantumState out = QuantumState::density(rho.spec(), rho.basis(), std::move(reduced),
                                           rho.squeeze_r());
  if (diag && out.leakage() > kLeakageThreshold)
    diag->flag_truncation("kick_map: top-level population " + std::to_string(out.leakage()));
  return out;
}

/// Traced JC kick as a two-operator Kraus pair acting on the damped
/// b mode. For step 1 (Delta > 0, atoms in |+>) the blocks are
/// {|+, n>, |-, n-1>} with detuned-Rabi frequency sqrt(W^2 n + eps^2/4):
///   stay(n)  = <+,n|U|+,n> = cos(Wr tau) - i (eps/2) sin(Wr tau)/Wr
///   lower(n) = <-,n-1|U|+,n> = i W sqrt(n) sin(Wr tau)/Wr
/// Step 2 (Delta < 0, atoms in |->) has the identical structure on b2.
/// eps is the dressed-splitting mismatch of a jittered drive; eps = 0
/// reproduces kick_map built from the same JC Hamiltonian exactly.
struct JcKickKraus {
  Eigen::VectorXcd stay;   // diagonal of the no-flip operator, index n
  Eigen::VectorXcd lower;  // amplitude |n> -> |n-1> of the flip operator
};

inline JcKickKraus jc_kick_kraus(double omega_b, double tau, int n_max, double detuning = 0.0) {
  JcKickKraus k;
  k.stay = Eigen::VectorXcd::Zero(n_max + 1);
  k.lower = Eigen::VectorXcd::Zero(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    double rabi = std::sqrt(omega_b * omega_b * n + 0.25 * detuning * detuning);
    if (rabi < 1e-300) {
      k.stay(n) = 1.0;
      continue;
    }
    double c = std::cos(rabi * tau), s = std::sin(rabi * tau) / rabi;
    k.stay(n) = cxd(c, -0.5 * detuning * s);
    k.lower(n) = cxd(0.0, omega_b * std::sqrt(static_cast<double>(n)) * s);
  }
  return k;
}

/// Apply the Kraus pair to a two-mode density matrix on the given mode.
/// Both operators act diagonally/subdiagonally in that mode's Fock index,
/// so the sandwich is O(dim^2). The update runs in place: element (i, j)
/// only reads (i, j) and the not-yet-visited (i + stride, j + stride).
inline void apply_jc_kick(Matrix& rho, const JcKickKraus& k, Factor mode,
                          const HilbertSpec& spec) {
  const int d2 = spec.dim2();
  const long dim = spec.without_atom().dim();
  if (rho.rows() != dim) throw ConfigError("apply_jc_kick: dimension mismatch");
  const long stride = (mode == Factor::mode1) ? d2 : 1;
  const int mode_dim = (mode == Factor::mode1) ? spec.dim1() : d2;

  // Per-flat-index coefficients: sc multiplies in place, lc pulls from the
  // level above (amplitude of |n+1> -> |n>).
  Eigen::VectorXcd sc(dim), lc(dim);
  for (long i = 0; i < dim; ++i) {
    int n = static_cast<int>((mode == Factor::mode1) ? i / d2 : i % d2);
    sc(i) = k.stay(n);
    lc(i) = (n + 1 < mode_dim) ? k.lower(n + 1) : cxd(0, 0);
  }
  for (long j = 0; j < dim; ++j) {
    const cxd scj = std::conj(sc(j));
    const cxd lcj = std::conj(lc(j));
    cxd* col = rho.data() + j * dim;
    const cxd* col_up = (lcj != cxd(0, 0)) ? rho.data() + (j + stride) * dim : nullptr;
    for (long i = 0; i < dim; ++i) {
      cxd v = sc(i) * col[i] * scj;
      if (col_up && lc(i) != cxd(0, 0)) v += lc(i) * col_up[i + stride] * lcj;
      col[i] = v;
    }
  }
}

}  // namespace tmsq
