// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>

#include "tmsq/common.hpp"

namespace tmsq {

/// Physical drive inputs. Angular frequencies in rad/s throughout; the
/// classical Rabi coupling Omega and the cavity coupling g are real > 0
/// (complex drive phases are folded out).
struct DriveParams {
  double Omega = 0.0;                   // classical Rabi coupling
  double g = 0.0;                       // atom-cavity coupling, g = g1 = g2
  double Delta = 0.0;                   // omega_L - omega_0
  std::optional<double> omega0;         // absolute transition frequency
  std::optional<double> omegaL;         // absolute drive frequency

  void validate(Diagnostics* diag = nullptr) const {
    if (Omega <= 0) throw RegimeError("DriveParams: Omega must be > 0");
    if (g <= 0) throw RegimeError("DriveParams: g must be > 0");
    if (omega0 && omegaL) {
      double implied = *omegaL - *omega0;
      if (std::abs(implied - Delta) > 1e-9 * std::max(1.0, std::abs(Delta)))
        throw ConfigError("DriveParams: Delta does not equal omegaL - omega0");
    }
    if (g / Omega > 0.1)
      warn_into(diag, "DriveParams: g/Omega = " + std::to_string(g / Omega) +
                          " > 0.1; the drive is not strongly saturating");
  }
};

/// Dressed-state and squeezing quantities derived from (Delta, Omega, g).
struct DressedParams {
  double d = 0.0;            // dressed splitting sqrt(Delta^2 + 4 Omega^2)
  double theta = 0.0;        // mixing angle, tan(theta) = 2 Omega / (d - Delta)
  double sin_theta = 0.0;    // |+> = sin(theta)|g> + cos(theta)|e>
  double cos_theta = 0.0;    // |-> = cos(theta)|g> - sin(theta)|e>
  double energy_plus = 0.0;  // -(Delta - d)/2
  double energy_minus = 0.0; // -(Delta + d)/2
  int delta_sign = 0;        // sign of Delta; selects which b-mode couples
  double mu = 0.0;           // tan^2(theta) folded into [0, 1)
  double r_mu = 0.0;         // arctanh(mu)
  double Omega_b = 0.0;      // g sqrt((1 - mu)/(1 + mu))
  bool regime_ok = true;     // g/d below the RWA guard
};

/// Threshold for the machine-checkable RWA regime flag g/d.
inline constexpr double kRegimeRatio = 0.05;

/// Semiclassical dressed states of the driven two-level atom: splitting,
/// mixing angle, |+-> coefficients and energies. Squeezing fields are
/// left unset (use squeeze_params for the full map).
inline DressedParams dressed_states(double Delta, double Omega) {
  if (Omega <= 0) throw RegimeError("dressed_states: Omega must be > 0");
  DressedParams p;
  p.d = std::sqrt(Delta * Delta + 4.0 * Omega * Omega);
  // (d - Delta)(d + Delta) = 4 Omega^2; pick the cancellation-free form.
  double tan_theta = (Delta > 0) ? (p.d + Delta) / (2.0 * Omega) : 2.0 * Omega / (p.d - Delta);
  p.theta = std::atan(tan_theta);
  p.sin_theta = std::sin(p.theta);
  p.cos_theta = std::cos(p.theta);
  p.energy_plus = -(Delta - p.d) / 2.0;
  p.energy_minus = -(Delta + p.d) / 2.0;
  p.delta_sign = (Delta > 0) ? 1 : (Delta < 0 ? -1 : 0);
  return p;
}

/// Full parameter map (Delta, Omega, g) -> (d, theta, mu, r_mu, Omega_b).
/// Delta = 0 sits at mu = 1 where r_mu diverges and is rejected, as is
/// the numerically indistinguishable band |tan(theta) - 1| < 1e-6.
inline DressedParams squeeze_params(double Delta, double Omega, double g,
                                    Diagnostics* diag = nullptr) {
  if (g <= 0) throw RegimeError("squeeze_params: g must be > 0");
  if (Delta == 0.0)
    throw RegimeError("squeeze_params: Delta = 0 gives mu = 1 (divergent squeezing)");
  DressedParams p = dressed_states(Delta, Omega);
  double tan_theta = std::tan(p.theta);
  if (std::abs(tan_theta - 1.0) < 1e-6)
    throw RegimeError("squeeze_params: |tan(theta)| within 1e-6 of 1; mu -> 1 and the "
                      "pumping rate Omega_b -> 0 (no meaningful dynamics)");
  // mu = tan^2(theta) or its inverse, whichever lies in (0, 1);
  // both branches reduce to 4 Omega^2 / (d + |Delta|)^2.
  double s = p.d + std::abs(Delta);
  p.mu = 4.0 * Omega * Omega / (s * s);
  p.r_mu = std::atanh(p.mu);
  p.Omega_b = g * std::sqrt((1.0 - p.mu) / (1.0 + p.mu));
  p.regime_ok = (g / p.d < kRegimeRatio);
  if (!p.regime_ok)
    warn_into(diag, "squeeze_params: g/d = " + std::to_string(g / p.d) +
                        " >= " + std::to_string(kRegimeRatio) +
                        "; resonant-term selection is not well separated");
  return p;
}

/// Cavity-mode placement on the Rabi sidebands.
struct ModeSetup {
  double omega1 = 0.0;  // omega_L - d
  double omega2 = 0.0;  // omega_L + d
  double delta1 = 0.0;  // omega_L - omega1 = +d
  double delta2 = 0.0;  // omega_L - omega2 = -d
};

/// Resonant placement delta1 = d, delta2 = -d for given drive frequency.
inline ModeSetup mode_frequencies(double omegaL, double Delta, double Omega) {
  DressedParams p = dressed_states(Delta, Omega);
  ModeSetup m;
  m.delta1 = p.d;
  m.delta2 = -p.d;
  m.omega1 = omegaL - p.d;
  m.omega2 = omegaL + p.d;
  return m;
}

/// Inverse map: the detuning that realizes a requested mu at given Omega.
/// sign picks the branch (step 1 uses +1, step 2 uses -1).
inline double drive_for_mu(double mu_target, double Omega, int sign) {
  if (!(mu_target > 0.0 && mu_target < 1.0))
    throw RegimeError("drive_for_mu: mu must lie in (0, 1)");
  if (Omega <= 0) throw RegimeError("drive_for_mu: Omega must be > 0");
  if (sign != 1 && sign != -1) throw ConfigError("drive_for_mu: sign must be +1 or -1");
  return sign * Omega * (1.0 - mu_target) / std::sqrt(mu_target);
}

}  // namespace tmsq
