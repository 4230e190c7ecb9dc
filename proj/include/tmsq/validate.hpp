// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tmsq/config.hpp"

namespace tmsq {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Cross-module property suite behind the `validate` command. Each check
/// is a smaller, faster variant of the corresponding unit/acceptance
/// test; the point is to exercise the configured parameter set, not to
/// re-prove the library.
inline std::vector<PropertyResult> run_validation_suite(const RunConfig& rc) {
  std::vector<PropertyResult> out;
  auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
    try {
      auto [ok, detail] = f();
      out.push_back({name, ok, detail});
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  const ProtocolConfig& p = rc.protocol;
  const double mu = p.mu;
  const double Delta = drive_for_mu(mu, p.Omega, +1);
  const DressedParams dp = squeeze_params(Delta, p.Omega, p.g);

  check("squeeze-unitarity", [&] {
    HilbertSpec spec = HilbertSpec::modes(20, 20);
    Matrix s = squeeze_op(0.5, spec).mat;
    double dev = (s.adjoint() * s - Matrix::Identity(spec.dim(), spec.dim())).cwiseAbs().maxCoeff();
    return std::make_pair(dev < 1e-8, "||S^dag S - I||_max = " + detail::num(dev));
  });

  check("tmsv-geometric-marginal", [&] {
    HilbertSpec spec = HilbertSpec::modes(18, 18);
    double r = std::min(dp.r_mu, 1.0);
    QuantumState tmsv = tmsv_state(r, spec);
    Eigen::MatrixXd pd = tmsv.joint_number_distribution();
    double lambda = std::tanh(r) * std::tanh(r);
    double worst = 0;
    for (int n = 0; n + 1 <= 12; ++n)
      worst = std::max(worst, std::abs(pd(n + 1, n + 1) / pd(n, n) - lambda));
    return std::make_pair(worst < 1e-10, "max ratio error " + detail::num(worst));
  });

  check("dressed-round-trip", [&] {
    double worst = 0;
    for (double m : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      for (int sign : {+1, -1}) {
        double d = drive_for_mu(m, p.Omega, sign);
        worst = std::max(worst, std::abs(squeeze_params(d, p.Omega, p.g).mu - m));
      }
    }
    return std::make_pair(worst < 1e-10, "max |mu roundtrip error| = " + detail::num(worst));
  });

  check("hamiltonian-hermiticity", [&] {
    HilbertSpec spec = HilbertSpec::modes(6, 6).with_atom();
    Matrix h3 = dressed_interaction_hamiltonian(dp, p.g, spec).mat;
    Matrix h4 = effective_hamiltonian(dp, p.g, spec).mat;
    double dev = std::max((h3 - h3.adjoint()).cwiseAbs().maxCoeff(),
                          (h4 - h4.adjoint()).cwiseAbs().maxCoeff());
    return std::make_pair(dev < 1e-12 * dp.d, "||H - H^dag||_max = " + detail::num(dev));
  });

  check("kick-trace-preservation", [&] {
    HilbertSpec fspec = HilbertSpec::modes(6, 6);
    QuantumState st = basis_transform(vacuum_state(fspec, Basis::a), dp.r_mu, Direction::a_to_b);
    Operator h = bogoliubov_jc_hamiltonian(dp, fspec.with_atom());
    QuantumState kicked = kick_map(st, AtomState::plus, h, 0.3 / dp.Omega_b);
    double tr = kicked.density_matrix().trace().real();
    return std::make_pair(std::abs(tr - 1.0) < 1e-10, "trace - 1 = " + detail::num(tr - 1.0));
  });

  check("kick-lindblad-bridge", [&] {
    HilbertSpec fspec = HilbertSpec::modes(8, 8);
    QuantumState st = basis_transform(vacuum_state(fspec, Basis::a),
                                      std::min(dp.r_mu, 0.6), Direction::a_to_b);
    double tau = 1e-3 / dp.Omega_b;
    Operator hint = jc_interaction(dp, fspec.with_atom());
    Matrix rho = st.density_matrix();
    Matrix kicked = kick_map(st, AtomState::plus, hint, tau).density_matrix();
    Matrix b1 = mode_annihilation(Factor::mode1, fspec).mat;
    Matrix n1 = b1.adjoint() * b1;
    Matrix gen = -0.5 * std::pow(dp.Omega_b * tau, 2) *
                 (n1 * rho - 2.0 * b1 * rho * b1.adjoint() + rho * n1);
    double rel = (kicked - rho - gen).cwiseAbs().maxCoeff() / gen.cwiseAbs().maxCoeff();
    return std::make_pair(rel < 1e-4, "second-order residual " + detail::num(rel));
  });

  check("lindblad-analytic-decay", [&] {
    HilbertSpec spec = HilbertSpec::modes(10, 4);
    QuantumState st = basis_transform(vacuum_state(spec, Basis::a), std::atanh(0.5),
                                      Direction::a_to_b);
    double n0 = occupation(st.density_matrix(), spec, Factor::mode1);
    double gamma = 3.0, t = 1.0;
    QuantumState evolved = lindblad_evolve(st, gamma, Factor::mode1, t, p.ode);
    double nt = occupation(evolved.density_matrix(), spec, Factor::mode1);
    double rel = std::abs(nt - n0 * std::exp(-gamma * t)) / (n0 * std::exp(-gamma * t));
    return std::make_pair(rel < 1e-8, "relative decay error " + detail::num(rel));
  });

  check("poisson-determinism", [&] {
    auto a = poisson_arrivals(2.0, 50.0, p.seed);
    auto b = poisson_arrivals(2.0, 50.0, p.seed);
    bool same = a == b;
    double count_dev = std::abs(static_cast<double>(a.size()) - 100.0) / std::sqrt(100.0);
    return std::make_pair(same && count_dev < 5.0,
                          "n = " + std::to_string(a.size()) + ", identical resample: " +
                              (same ? "yes" : "no"));
  });

  check("leakage-budget", [&] {
    // Build the protocol's initial b-basis state at the configured
    // cutoffs and apply the top-level population rule.
    Diagnostics diag;
    ProtocolSetup setup = prepare_protocol(p, &diag);
    double leak;
    if (setup.field_spec.dim() > p.max_joint_dim) {
      int tail_cut = static_cast<int>(std::ceil(std::log(1e-8) / (2.0 * std::log(mu))));
      int n_max = p.n_max1 ? *p.n_max1 : std::max(recommended_cutoff(setup.predicted_nb0), tail_cut);
      leak = diagonal_vacuum_start(dp.r_mu, n_max).leakage();
    } else {
      leak = detail::dense_initial_state(p, setup, &diag).leakage();
    }
    bool ok = leak < rc.leakage_threshold;
    return std::make_pair(ok, "top-level population " + detail::num(leak) +
                                  (ok ? "" : " exceeds " + detail::num(rc.leakage_threshold) +
                                                "; raise numerics.n_max1/n_max2 or lower mu"));
  });

  check("epr-convention", [&] {
    HilbertSpec spec = HilbertSpec::modes(14, 14);
    double r = 0.4;
    double epr = epr_variance(tmsv_state(r, spec));
    double dev = std::abs(epr - 2.0 * std::exp(-2.0 * r));
    double en = log_negativity(tmsv_state(r, spec));
    double dev_en = std::abs(en - 2.0 * r / std::log(2.0));
    return std::make_pair(dev < 1e-6 && dev_en < 1e-3,
                          "EPR dev " + detail::num(dev) + ", E_N dev " + detail::num(dev_en));
  });

  check("rwa-two-point-scaling", [&] {
    double g1 = 0.01 * dp.d;
    DressedParams dpa = squeeze_params(Delta, p.Omega, g1);
    HilbertSpec spec = HilbertSpec::modes(7, 7).with_atom();
    double tau = 0.1 / dpa.Omega_b;
    double e1 = rwa_error(dpa, g1, spec, tau);
    DressedParams dpb = squeeze_params(Delta, p.Omega, g1 / 2);
    double e2 = rwa_error(dpb, g1 / 2, spec, tau);
    double ratio = e1 / e2;
    return std::make_pair(ratio > 1.5 && ratio < 3.0,
                          "e(g)/e(g/2) = " + detail::num(ratio) + " at fixed tau");
  });

  check("stochastic-me-consistency", [&] {
    ProtocolConfig cfg = p;
    cfg.mu = 0.5;
    cfg.engine = Engine::stochastic;
    cfg.trajectories = 40;
    cfg.records_per_step = 4;
    cfg.n_max1 = cfg.n_max2 = 8;
    cfg.n_bar_inf = 0.05;
    DressedParams dph = squeeze_params(drive_for_mu(0.5, p.Omega, +1), p.Omega, p.g);
    cfg.reservoir = ReservoirParams{};
    cfg.reservoir.tau = 0.05 / dph.Omega_b;
    cfg.reservoir.r_at = 0.08 / *cfg.reservoir.tau;
    ProtocolResult st = run_protocol(cfg);
    ProtocolConfig mecfg = cfg;
    mecfg.engine = Engine::master_equation;
    mecfg.reservoir = ReservoirParams{};
    mecfg.reservoir.gamma_explicit = st.metrics.gamma;
    ProtocolResult me = run_protocol(mecfg);
    double worst = 0;
    for (std::size_t i = 0; i < st.events.size(); ++i) {
      if (st.events[i].nb1_se <= 0) continue;
      worst = std::max(worst,
                       std::abs(st.events[i].nb1 - me.events[i].nb1) / st.events[i].nb1_se);
    }
    return std::make_pair(worst < 5.0, "worst checkpoint deviation " + detail::num(worst) + " SE");
  });

  check("steady-state-uniqueness", [&] {
    ProtocolConfig cfg = p;
    cfg.engine = Engine::master_equation;
    cfg.mu = std::min(mu, 0.6);
    cfg.reservoir = ReservoirParams{};
    cfg.reservoir.gamma_explicit = 1.0;
    cfg.records_per_step = 4;
    cfg.n_max1 = cfg.n_max2 = 20;
    ProtocolResult rv = run_protocol(cfg);
    cfg.initial = InitialState::thermal(0.5);
    ProtocolResult rt = run_protocol(cfg);
    double td = trace_distance(rv.final_state->density_matrix(),
                               rt.final_state->density_matrix());
    double bound = 2.0 * cfg.n_bar_inf + 0.01;
    return std::make_pair(td < bound,
                          "endpoint trace distance " + detail::num(td) + " vs bound " +
                              detail::num(bound));
  });

  check("fidelity-basis-invariance", [&] {
    HilbertSpec spec = HilbertSpec::modes(12, 12);
    double r = std::min(dp.r_mu, 0.5);
    QuantumState state_b = basis_transform(thermal_state(spec, 0.02, Basis::a), r,
                                           Direction::a_to_b);
    QuantumState target_b = vacuum_state(spec, Basis::b, r);
    double f_b = fidelity(state_b, target_b);
    QuantumState state_a = basis_transform(state_b, r, Direction::b_to_a);
    double f_a = fidelity(state_a, tmsv_state(r, spec));
    double dev = std::abs(f_a - f_b);
    return std::make_pair(dev < 1e-8, "|F_a - F_b| = " + detail::num(dev));
  });

  check("entanglement-detection-agreement", [&] {
    ProtocolConfig cfg = p;
    cfg.engine = Engine::master_equation;
    cfg.mu = 0.5;
    cfg.reservoir = ReservoirParams{};
    cfg.reservoir.gamma_explicit = 1.0;
    cfg.records_per_step = 4;
    cfg.n_max1 = cfg.n_max2 = 14;
    ProtocolResult r1 = run_protocol(cfg);
    bool epr_detects = r1.metrics.epr_variance < 2.0;
    bool en_detects = r1.metrics.log_negativity && *r1.metrics.log_negativity > 0.0;
    return std::make_pair(epr_detects == en_detects,
                          "EPR = " + detail::num(r1.metrics.epr_variance) + ", E_N = " +
                              detail::num(r1.metrics.log_negativity.value_or(-1)));
  });

  return out;
}

}  // namespace tmsq
