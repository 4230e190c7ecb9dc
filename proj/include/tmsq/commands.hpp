// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tmsq/report.hpp"
#include "tmsq/validate.hpp"

namespace tmsq {

namespace detail {

inline void stamp_provenance(Dataset& d, const RunConfig& rc) {
  d.meta["version"] = kVersion;
  d.meta["config_hash"] = hash_string(rc.canonical_text);
  d.meta["seed"] = std::to_string(rc.protocol.seed);
}

inline void stamp_metrics(Dataset& d, const ProtocolResult& res) {
  const ProtocolMetrics& m = res.metrics;
  d.meta["engine"] = res.engine_detail;
  d.meta["fidelity"] = format_double(m.fidelity);
  if (m.fidelity_se) d.meta["fidelity_se"] = format_double(*m.fidelity_se);
  d.meta["epr_variance"] = format_double(m.epr_variance);
  if (m.log_negativity) d.meta["log_negativity"] = format_double(*m.log_negativity);
  d.meta["mean_n_b1"] = format_double(m.mean_n_b1);
  d.meta["mean_n_b2"] = format_double(m.mean_n_b2);
  d.meta["mean_n_a1"] = format_double(m.mean_n_a1);
  d.meta["mean_n_a2"] = format_double(m.mean_n_a2);
  d.meta["leakage"] = format_double(m.leakage);
  d.meta["gamma"] = format_double(m.gamma);
  d.meta["gammaT1"] = format_double(m.gammaT1);
  d.meta["gammaT2"] = format_double(m.gammaT2);
  d.meta["T1_s"] = format_double(m.T1);
  d.meta["T2_s"] = format_double(m.T2);
  d.meta["two_T_s"] = format_double(m.total_time);
  d.meta["truncation_suspect"] = res.diag.truncation_suspect ? "true" : "false";
  for (std::size_t i = 0; i < res.diag.warnings.size(); ++i)
    d.meta["warning_" + std::to_string(i)] = res.diag.warnings[i];
}

}  // namespace detail

/// Derived-parameter report: the full formula chain from the drive to
/// the protocol timing, with regime flags.
inline Dataset cmd_params(const RunConfig& rc) {
  const ProtocolConfig& p = rc.protocol;
  Diagnostics diag;
  double Delta = rc.delta ? *rc.delta : drive_for_mu(p.mu, p.Omega, +1);
  DressedParams dp = squeeze_params(Delta, p.Omega, p.g, &diag);
  ModeSetup modes = mode_frequencies(0.0, Delta, p.Omega);  // offsets from omega_L
  double gamma = p.reservoir.gamma_for(dp.Omega_b, &diag);
  double n0_vac = p.mu * p.mu / (1.0 - p.mu * p.mu);
  double gammaT = (n0_vac > p.n_bar_inf) ? std::log(n0_vac / p.n_bar_inf) : 0.0;

  Dataset d;
  d.command = "params";
  d.columns = {"mu",      "r_mu",    "Omega_b", "d",          "Delta",     "theta",
               "delta1",  "delta2",  "gamma",   "n_bar0_vac", "n_bar_inf", "gammaT_step",
               "T_step_s", "two_T_s", "regime_ok", "g_over_d", "g_over_Omega"};
  d.rows = {{p.mu, dp.r_mu, dp.Omega_b, dp.d, Delta, dp.theta, modes.delta1, modes.delta2, gamma,
             n0_vac, p.n_bar_inf, gammaT, gammaT / gamma, 2.0 * gammaT / gamma,
             dp.regime_ok ? 1.0 : 0.0, p.g / dp.d, p.g / p.Omega}};
  detail::stamp_provenance(d, rc);
  if (p.reservoir.tau) d.meta["Omega_b_tau"] = format_double(dp.Omega_b * *p.reservoir.tau);
  if (p.reservoir.r_at && p.reservoir.tau)
    d.meta["r_at_tau"] = format_double(*p.reservoir.r_at * *p.reservoir.tau);
  for (std::size_t i = 0; i < diag.warnings.size(); ++i)
    d.meta["warning_" + std::to_string(i)] = diag.warnings[i];
  return d;
}

/// Two-step relaxation curves <b_j^dag b_j>(t) in units of tau0 = 1/gamma
/// (b-basis master-equation engine).
inline Dataset cmd_fig2a(const RunConfig& rc) {
  ProtocolConfig p = rc.protocol;
  p.engine = Engine::master_equation;
  p.sim_basis = Basis::b;
  ProtocolResult res = run_protocol(p);

  Dataset d;
  d.command = "fig2a";
  d.columns = {"t_over_tau0", "t_s", "nb1", "nb2", "step"};
  for (const EventRecord& e : res.events)
    d.rows.push_back({e.s, e.t, e.nb1, e.nb2, static_cast<double>(e.step)});
  detail::stamp_provenance(d, rc);
  detail::stamp_metrics(d, res);
  return d;
}

/// Steady-state photon number and total preparation time against mu,
/// from the closed-form relations (no simulation involved).
inline Dataset cmd_fig2b(const RunConfig& rc) {
  const ProtocolConfig& p = rc.protocol;
  Diagnostics diag;
  Dataset d;
  d.command = "fig2b";
  d.columns = {"mu", "n_bar", "gamma_two_T", "two_T_s"};
  for (int i = 0; i < rc.mu_points; ++i) {
    double mu = (rc.mu_points == 1)
                    ? rc.mu_min
                    : rc.mu_min + (rc.mu_max - rc.mu_min) * i / (rc.mu_points - 1);
    double mu2 = mu * mu;
    double n_bar = mu2 / (1.0 - mu2);
    double n0 = n_bar + rc.fig2b_thermal_n * (1.0 + mu2) / (1.0 - mu2);
    DressedParams dp = squeeze_params(drive_for_mu(mu, p.Omega, +1), p.Omega, p.g);
    double gamma = p.reservoir.gamma_for(dp.Omega_b, &diag);
    double g2t = (n0 > p.n_bar_inf) ? 2.0 * std::log(n0 / p.n_bar_inf) : 0.0;
    d.rows.push_back({mu, n_bar, g2t, g2t / gamma});
  }
  detail::stamp_provenance(d, rc);
  d.meta["thermal_n"] = format_double(rc.fig2b_thermal_n);
  d.meta["n_bar_inf"] = format_double(p.n_bar_inf);
  return d;
}

/// Full protocol run with per-event records and endpoint metrics.
inline Dataset cmd_protocol(const RunConfig& rc) {
  ProtocolResult res = run_protocol(rc.protocol);
  Dataset d;
  d.command = "protocol";
  d.columns = {"t_over_tau0", "t_s", "step", "nb1", "nb2", "na1", "na2",
               "leakage",     "nb1_se", "nb2_se"};
  for (const EventRecord& e : res.events)
    d.rows.push_back({e.s, e.t, static_cast<double>(e.step), e.nb1, e.nb2, e.na1, e.na2, e.leakage,
                      e.nb1_se, e.nb2_se});
  detail::stamp_provenance(d, rc);
  detail::stamp_metrics(d, res);
  return d;
}

}  // namespace tmsq
