// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "tmsq/dressed.hpp"
#include "tmsq/hilbert.hpp"

namespace tmsq {

// Hamiltonians are in angular-frequency units (hbar = 1) and act on a
// spec that includes the atom factor, in the dressed basis {|+>, |->}.

/// Dressed-frame free part: d/2 pi_z - delta1 n1 - delta2 n2.
inline Operator dressed_free_hamiltonian(const DressedParams& p, const ModeSetup& modes,
                                         const HilbertSpec& spec) {
  if (!spec.include_atom) throw ConfigError("dressed_free_hamiltonian: spec needs the atom factor");
  Matrix h = 0.5 * p.d * embed(atom_pi_z(), Factor::atom, spec).mat;
  h -= modes.delta1 * mode_number(Factor::mode1, spec).mat;
  h -= modes.delta2 * mode_number(Factor::mode2, spec).mat;
  return Operator(spec, std::move(h));
}

inline ModeSetup resonant_modes(const DressedParams& p) {
  ModeSetup m;
  m.delta1 = p.d;
  m.delta2 = -p.d;
  return m;
}

/// Full dressed-frame Hamiltonian: free part plus all three interaction
/// term groups for each mode,
///   g [ pi_z (a + a^dag) cos sin + (pi^+ a + a^dag pi^-) cos^2
///       - (pi^- a + pi^+ a^dag) sin^2 ].
inline Operator dressed_interaction_hamiltonian(const DressedParams& p, double g,
                                                const HilbertSpec& spec,
                                                std::optional<ModeSetup> modes = {}) {
  if (!spec.include_atom)
    throw ConfigError("dressed_interaction_hamiltonian: spec needs the atom factor");
  ModeSetup ms = modes ? *modes : resonant_modes(p);
  Matrix h = dressed_free_hamiltonian(p, ms, spec).mat;

  const Matrix pz = embed(atom_pi_z(), Factor::atom, spec).mat;
  const Matrix pp = embed(atom_pi_plus(), Factor::atom, spec).mat;
  const Matrix pm = embed(atom_pi_minus(), Factor::atom, spec).mat;
  const double cs = p.cos_theta * p.sin_theta;
  const double c2 = p.cos_theta * p.cos_theta;
  const double s2 = p.sin_theta * p.sin_theta;

  for (Factor mode : {Factor::mode1, Factor::mode2}) {
    const Matrix a = mode_annihilation(mode, spec).mat;
    const Matrix ad = a.adjoint();
    h += g * (cs * (pz * (a + ad)) + c2 * (pp * a + ad * pm) - s2 * (pm * a + pp * ad));
  }
  return Operator(spec, std::move(h));
}

/// Which interaction term groups rotate at zero frequency under the free
/// dressed Hamiltonian for one mode: the pi_z displacement group rotates
/// at |delta|, the co-rotating (cos^2) group at |d + delta|, the
/// counter-rotating (sin^2) group at |d - delta|.
struct ModeTermSelection {
  bool displacement = false;
  bool co_rotating = false;
  bool counter_rotating = false;
  double freq_displacement = 0.0;
  double freq_co_rotating = 0.0;
  double freq_counter_rotating = 0.0;

  bool any() const { return displacement || co_rotating || counter_rotating; }
};

struct TermSelection {
  ModeTermSelection mode1, mode2;
};

inline TermSelection select_resonant_terms(double delta1, double delta2, double d,
                                           double rel_tol = 1e-9) {
  if (!std::isfinite(delta1) || !std::isfinite(delta2) || !std::isfinite(d))
    throw ConfigError("select_resonant_terms: frequencies must be finite");
  const double scale = std::max({std::abs(d), std::abs(delta1), std::abs(delta2), 1e-300});
  auto classify = [&](double delta) {
    ModeTermSelection t;
    t.freq_displacement = std::abs(delta);
    t.freq_co_rotating = std::abs(d + delta);
    t.freq_counter_rotating = std::abs(d - delta);
    t.displacement = t.freq_displacement < rel_tol * scale;
    t.co_rotating = t.freq_co_rotating < rel_tol * scale;
    t.counter_rotating = t.freq_counter_rotating < rel_tol * scale;
    return t;
  };
  return TermSelection{classify(delta1), classify(delta2)};
}

/// Effective Hamiltonian at the resonant placement delta1 = d = -delta2:
///   H0 + [ g (a2^dag cos^2 - a1 sin^2) pi^- + H.c. ].
/// Valid for g << d; callers should check params.regime_ok.
inline Operator effective_hamiltonian(const DressedParams& p, double g, const HilbertSpec& spec,
                                      Diagnostics* diag = nullptr) {
  if (!spec.include_atom) throw ConfigError("effective_hamiltonian: spec needs the atom factor");
  if (!p.regime_ok)
    warn_into(diag, "effective_hamiltonian: g/d regime flag not satisfied; discarded "
                    "off-resonant terms are not negligible");
  Matrix h = dressed_free_hamiltonian(p, resonant_modes(p), spec).mat;
  const Matrix pm = embed(atom_pi_minus(), Factor::atom, spec).mat;
  const Matrix a1 = mode_annihilation(Factor::mode1, spec).mat;
  const Matrix a2 = mode_annihilation(Factor::mode2, spec).mat;
  const double c2 = p.cos_theta * p.cos_theta;
  const double s2 = p.sin_theta * p.sin_theta;
  Matrix coupling = g * ((c2 * a2.adjoint() - s2 * a1) * pm);
  h += coupling + coupling.adjoint();
  return Operator(spec, std::move(h));
}

/// Jaynes-Cummings interaction in the Bogoliubov frame. The Fock labels
/// of the returned operator refer to the b modes:
///   Delta > 0:  -Omega_b (b1 pi^- + b1^dag pi^+)
///   Delta < 0:  +Omega_b (b2^dag pi^- + b2 pi^+)
inline Operator jc_interaction(const DressedParams& p, const HilbertSpec& spec) {
  if (!spec.include_atom) throw ConfigError("jc_interaction: spec needs the atom factor");
  if (p.delta_sign == 0) throw RegimeError("jc_interaction: Delta = 0 has no JC form");
  const Matrix pp = embed(atom_pi_plus(), Factor::atom, spec).mat;
  const Matrix pm = embed(atom_pi_minus(), Factor::atom, spec).mat;
  Matrix h;
  if (p.delta_sign > 0) {
    const Matrix b1 = mode_annihilation(Factor::mode1, spec).mat;
    h = -p.Omega_b * (b1 * pm + b1.adjoint() * pp);
  } else {
    const Matrix b2 = mode_annihilation(Factor::mode2, spec).mat;
    h = p.Omega_b * (b2.adjoint() * pm + b2 * pp);
  }
  return Operator(spec, std::move(h));
}

/// Full b-frame Hamiltonian H0 + H_int with
/// H0 = d (pi_z/2 - b1^dag b1 + b2^dag b2); H0 and H_int commute.
inline Operator bogoliubov_jc_hamiltonian(const DressedParams& p, const HilbertSpec& spec) {
  Operator h_int = jc_interaction(p, spec);
  Matrix h0 = 0.5 * p.d * embed(atom_pi_z(), Factor::atom, spec).mat;
  h0 -= p.d * mode_number(Factor::mode1, spec).mat;
  h0 += p.d * mode_number(Factor::mode2, spec).mat;
  return Operator(spec, h0 + h_int.mat);
}

}  // namespace tmsq
