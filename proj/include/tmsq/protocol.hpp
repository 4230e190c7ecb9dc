// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <thread>

#include "tmsq/arrivals.hpp"
#include "tmsq/diagonal.hpp"
#include "tmsq/kick.hpp"
#include "tmsq/lindblad.hpp"
#include "tmsq/observables.hpp"

namespace tmsq {

enum class Engine { stochastic, master_equation };

struct InitialState {
  enum class Kind { vacuum, thermal, explicit_state };
  Kind kind = Kind::vacuum;
  double n_th = 0.0;
  std::optional<QuantumState> state;

  static InitialState vacuum() { return {}; }
  static InitialState thermal(double n) {
    if (n < 0) throw RegimeError("InitialState: negative thermal occupation");
    return InitialState{Kind::thermal, n, {}};
  }
  static InitialState explicit_state(QuantumState s) {
    return InitialState{Kind::explicit_state, 0.0, std::move(s)};
  }
};

/// Atomic-beam description. gamma may be supplied directly (calibrated)
/// or derived as r_at Omega_b^2 tau^2; the stochastic engine always needs
/// (r_at, tau).
struct ReservoirParams {
  std::optional<double> r_at;
  std::optional<double> tau;
  std::optional<double> gamma_explicit;
  double jitter_std = 0.0;

  double gamma_for(double omega_b, Diagnostics* diag = nullptr) const {
    if (gamma_explicit && (r_at || tau))
      throw ConfigError("reservoir: gamma specified both explicitly and via (r_at, tau)");
    if (gamma_explicit) {
      if (*gamma_explicit <= 0) throw RegimeError("reservoir: gamma must be > 0");
      return *gamma_explicit;
    }
    if (r_at && tau) {
      if (*r_at <= 0 || *tau <= 0) throw RegimeError("reservoir: r_at and tau must be > 0");
      if (omega_b * *tau > 0.2)
        warn_into(diag, "reservoir: Omega_b*tau = " + std::to_string(omega_b * *tau) +
                            " > 0.2; the weak-kick expansion behind gamma is strained");
      if (*r_at * *tau > 0.1)
        warn_into(diag, "reservoir: r_at*tau = " + std::to_string(*r_at * *tau) +
                            " > 0.1; more than one atom may overlap the cavity");
      return *r_at * omega_b * omega_b * *tau * *tau;
    }
    throw ConfigError("reservoir: supply gamma or both r_at and tau");
  }
};

struct ProtocolConfig {
  double Omega = 1.0;
  double g = 0.01;
  double mu = 0.5;
  ReservoirParams reservoir;
  double n_bar_inf = 0.01;
  InitialState initial;
  Engine engine = Engine::master_equation;
  Basis sim_basis = Basis::b;
  std::uint64_t seed = 1;
  int trajectories = 1;
  int records_per_step = 200;
  long max_joint_dim = 2048;          // densest joint field dimension to materialize
  std::optional<int> n_max1, n_max2;  // cutoff overrides
  IntegratorOptions ode;
};

struct EventRecord {
  double t = 0;  // physical time (s)
  double s = 0;  // dimensionless gamma * t
  int step = 1;
  double nb1 = 0, nb2 = 0;  // <b_j^dag b_j>
  double na1 = 0, na2 = 0;  // <a_j^dag a_j>
  double leakage = 0;
  double nb1_se = 0, nb2_se = 0;  // ensemble standard errors (stochastic runs)
};

struct ProtocolMetrics {
  double fidelity = 0;  // overlap with |0,0>_b
  std::optional<double> fidelity_se;
  double epr_variance = 0;
  std::optional<double> log_negativity;
  double mean_n_b1 = 0, mean_n_b2 = 0;
  double mean_n_a1 = 0, mean_n_a2 = 0;
  double leakage = 0;
  double n0_step1 = 0, n0_step2 = 0;      // occupations entering each step
  double T1 = 0, T2 = 0, total_time = 0;  // seconds
  double gammaT1 = 0, gammaT2 = 0;
  double gamma = 0, mu = 0, r_mu = 0, Omega_b = 0, Delta0 = 0, d = 0;
};

struct ProtocolResult {
  std::vector<EventRecord> events;
  std::optional<QuantumState> final_state;
  std::optional<Eigen::MatrixXd> final_joint_distribution;  // reduced-engine output
  ProtocolMetrics metrics;
  Diagnostics diag;
  std::string engine_detail;
};

/// Derived quantities shared by every engine.
struct ProtocolSetup {
  double Delta0 = 0;
  DressedParams dressed_plus, dressed_minus;
  double gamma = 0;
  double r = 0;
  HilbertSpec field_spec = HilbertSpec::modes(1, 1);
  double predicted_nb0 = 0;
};

inline ProtocolSetup prepare_protocol(const ProtocolConfig& cfg, Diagnostics* diag) {
  if (!(cfg.mu > 0.0 && cfg.mu < 1.0)) throw RegimeError("protocol: mu must lie in (0, 1)");
  if (cfg.n_bar_inf <= 0) throw RegimeError("protocol: n_bar_inf must be > 0");
  if (cfg.records_per_step < 2) throw ConfigError("protocol: records_per_step must be >= 2");
  if (cfg.trajectories < 1) throw ConfigError("protocol: trajectories must be >= 1");
  ProtocolSetup s;
  s.Delta0 = drive_for_mu(cfg.mu, cfg.Omega, +1);
  s.dressed_plus = squeeze_params(s.Delta0, cfg.Omega, cfg.g, diag);
  s.dressed_minus = squeeze_params(-s.Delta0, cfg.Omega, cfg.g, nullptr);  // same warnings
  s.gamma = cfg.reservoir.gamma_for(s.dressed_plus.Omega_b, diag);
  s.r = s.dressed_plus.r_mu;
  DriveParams drive{cfg.Omega, cfg.g, s.Delta0, {}, {}};
  drive.validate(diag);

  const double mu2 = cfg.mu * cfg.mu;
  double nb0 = mu2 / (1.0 - mu2);  // vacuum start
  if (cfg.initial.kind == InitialState::Kind::thermal)
    nb0 = cfg.initial.n_th * (1.0 + mu2) / (1.0 - mu2) + mu2 / (1.0 - mu2);
  s.predicted_nb0 = nb0;

  if (cfg.initial.kind == InitialState::Kind::explicit_state) {
    s.field_spec = cfg.initial.state->spec().without_atom();
  } else if (cfg.sim_basis == Basis::b) {
    int n1 = cfg.n_max1 ? *cfg.n_max1 : recommended_cutoff(nb0);
    int n2 = cfg.n_max2 ? *cfg.n_max2 : recommended_cutoff(nb0);
    s.field_spec = HilbertSpec::modes(n1, n2);
  } else {
    // a-basis occupations stay near the squeezed-target level
    double sh = std::sinh(s.r);
    double na = sh * sh + (cfg.initial.n_th + cfg.n_bar_inf) * std::cosh(2.0 * s.r);
    int n1 = cfg.n_max1 ? *cfg.n_max1 : recommended_cutoff(na);
    int n2 = cfg.n_max2 ? *cfg.n_max2 : recommended_cutoff(na);
    s.field_spec = HilbertSpec::modes(n1, n2);
  }
  return s;
}

// ---------------------------------------------------------------------------
// rwa_error: trace distance, per kick of duration tau, between evolution
// under the full dressed Hamiltonian (all term groups) and under the
// resonant-terms-only effective Hamiltonian, from the fixed reference
// state |+> (x) |0,0>_a. The controlled comparison varies g at fixed
// (Delta, Omega) and fixed tau, isolating the g/d expansion parameter.
// ---------------------------------------------------------------------------
inline double rwa_error(const DressedParams& p, double g, const HilbertSpec& spec, double tau,
                        Diagnostics* diag = nullptr) {
  if (!spec.include_atom) throw ConfigError("rwa_error: spec needs the atom factor");
  if (g == 0.0) return 0.0;
  Vector psi0 = Vector::Zero(spec.dim());
  psi0(spec.index(0, 0, 0)) = 1.0;  // atom index 0 = |+>
  Matrix u_full = evolution_op(dressed_interaction_hamiltonian(p, g, spec).mat, tau, diag);
  Matrix u_eff = evolution_op(effective_hamiltonian(p, g, spec, diag).mat, tau, diag);
  Vector a = u_full * psi0, b = u_eff * psi0;
  double overlap = std::norm((a.adjoint() * b)(0, 0));
  return std::sqrt(std::max(0.0, 1.0 - overlap));
}

namespace detail {

inline std::vector<double> linspace(double a, double b, int points) {
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) v[i] = a + (b - a) * i / (points - 1);
  return v;
}

/// <a_j^dag a_j> of a b-labelled state from its b moments:
/// cosh^2 r <n_j> + sinh^2 r (<n_other> + 1) + 2 cosh r sinh r Re<b1 b2>.
inline double a_occupation_from_b(double nb_same, double nb_other, double re_pair, double r) {
  double c = std::cosh(r), s = std::sinh(r);
  return c * c * nb_same + s * s * (nb_other + 1.0) + 2.0 * c * s * re_pair;
}

// Time (in gamma*t) to pull <b^dag b> from n0 down to n_inf under the
// exponential decay; a step starting at or below the target is skipped.
inline double step_duration_s(double n0, double n_inf) {
  return (n0 > n_inf) ? std::log(n0 / n_inf) : 0.0;
}

/// Initial state in the requested simulation basis, materialized densely.
inline QuantumState dense_initial_state(const ProtocolConfig& cfg, const ProtocolSetup& setup,
                                        Diagnostics* diag) {
  const HilbertSpec& spec = setup.field_spec;
  QuantumState given = [&]() -> QuantumState {
    switch (cfg.initial.kind) {
      case InitialState::Kind::vacuum: return vacuum_state(spec, Basis::a);
      case InitialState::Kind::thermal: return thermal_state(spec, cfg.initial.n_th, Basis::a);
      case InitialState::Kind::explicit_state: return *cfg.initial.state;
    }
    throw ConfigError("protocol: unknown initial state kind");
  }();
  if (given.basis() == cfg.sim_basis) return given;
  Direction dir = (cfg.sim_basis == Basis::b) ? Direction::a_to_b : Direction::b_to_a;
  return basis_transform(given, setup.r, dir, diag);
}

struct BMoments {
  double nb1 = 0, nb2 = 0;
  cxd pair{0, 0};
  cxd m1{0, 0}, m2{0, 0};
};

inline BMoments b_moments(const Matrix& rho, const HilbertSpec& spec) {
  BMoments m;
  m.nb1 = occupation(rho, spec, Factor::mode1);
  m.nb2 = occupation(rho, spec, Factor::mode2);
  m.pair = mean_pair_lowering(rho, spec);
  m.m1 = mean_lowering(rho, spec, Factor::mode1);
  m.m2 = mean_lowering(rho, spec, Factor::mode2);
  return m;
}

inline double top_level_population(const Matrix& rho, const HilbertSpec& spec) {
  double top1 = 0, top2 = 0;
  for (int n2 = 0; n2 < spec.dim2(); ++n2)
    top1 += rho(spec.index(spec.n_max1, n2), spec.index(spec.n_max1, n2)).real();
  for (int n1 = 0; n1 < spec.dim1(); ++n1)
    top2 += rho(spec.index(n1, spec.n_max2), spec.index(n1, spec.n_max2)).real();
  return std::max(top1, top2);
}

inline EventRecord record_from_b_density(const Matrix& rho, const HilbertSpec& spec, double r,
                                         double t, double s, int step) {
  BMoments m = b_moments(rho, spec);
  EventRecord e;
  e.t = t;
  e.s = s;
  e.step = step;
  e.nb1 = m.nb1;
  e.nb2 = m.nb2;
  e.na1 = a_occupation_from_b(m.nb1, m.nb2, m.pair.real(), r);
  e.na2 = a_occupation_from_b(m.nb2, m.nb1, m.pair.real(), r);
  e.leakage = top_level_population(rho, spec);
  return e;
}

// ---------------------------------------------------------------------------
// Master-equation engines
// ---------------------------------------------------------------------------

inline void run_me_dense_b(const ProtocolConfig& cfg, const ProtocolSetup& setup,
                           ProtocolResult& res) {
  const HilbertSpec& spec = setup.field_spec;
  Matrix rho = dense_initial_state(cfg, setup, &res.diag).density_matrix();
  const double gamma = setup.gamma, r = setup.r;

  double t_offset = 0, s_offset = 0;
  for (int step = 0; step < 2; ++step) {
    Factor damped = (step == 0) ? Factor::mode1 : Factor::mode2;
    double n0 = occupation(rho, spec, damped);
    double dur = step_duration_s(n0, cfg.n_bar_inf);
    (step == 0 ? res.metrics.n0_step1 : res.metrics.n0_step2) = n0;
    (step == 0 ? res.metrics.gammaT1 : res.metrics.gammaT2) = dur;
    if (dur == 0.0) {
      res.events.push_back(record_from_b_density(rho, spec, r, t_offset, s_offset, step + 1));
      continue;
    }
    auto stops = linspace(0.0, dur, cfg.records_per_step + 1);
    lindblad_evolve_mode_observed(
        rho, spec, damped, stops,
        [&](const Matrix& m, double s) {
          res.events.push_back(
              record_from_b_density(m, spec, r, t_offset + s / gamma, s_offset + s, step + 1));
        },
        cfg.ode);
    t_offset += dur / gamma;
    s_offset += dur;
  }

  rho = 0.5 * (rho + rho.adjoint().eval());
  res.final_state = QuantumState::density(spec, Basis::b, std::move(rho), r);
  res.engine_detail = "master-equation/dense/b";
}

inline void run_me_diagonal_b(const ProtocolConfig& cfg, const ProtocolSetup& setup,
                              ProtocolResult& res) {
  if (cfg.initial.kind != InitialState::Kind::vacuum)
    throw RegimeError(
        "protocol: at this mu the joint density matrix exceeds max_joint_dim, and the reduced "
        "occupation-sector engine only supports the vacuum initial state; lower mu, raise "
        "max_joint_dim, or start from vacuum");
  const double gamma = setup.gamma, r = setup.r;
  // The grid is cheap, so size it by the series tail (weight mu^(2n))
  // down to 1e-8 rather than by the top-level-population rule alone.
  int tail_cut = static_cast<int>(std::ceil(std::log(1e-8) / (2.0 * std::log(cfg.mu))));
  int n_max = cfg.n_max1 ? *cfg.n_max1
                         : std::max(recommended_cutoff(setup.predicted_nb0), tail_cut);
  DiagonalState state = diagonal_vacuum_start(r, n_max, &res.diag);

  auto record = [&](const DiagonalState& d, double t, double s, int step) {
    EventRecord e;
    e.t = t;
    e.s = s;
    e.step = step;
    e.nb1 = d.occupation(Factor::mode1);
    e.nb2 = d.occupation(Factor::mode2);
    e.na1 = a_occupation_from_b(e.nb1, e.nb2, d.m12.real(), r);
    e.na2 = a_occupation_from_b(e.nb2, e.nb1, d.m12.real(), r);
    e.leakage = d.leakage();
    res.events.push_back(e);
  };

  double t_offset = 0, s_offset = 0;
  for (int step = 0; step < 2; ++step) {
    Factor damped = (step == 0) ? Factor::mode1 : Factor::mode2;
    double n0 = state.occupation(damped);
    double dur = step_duration_s(n0, cfg.n_bar_inf);
    (step == 0 ? res.metrics.n0_step1 : res.metrics.n0_step2) = n0;
    (step == 0 ? res.metrics.gammaT1 : res.metrics.gammaT2) = dur;
    if (dur == 0.0) {
      record(state, t_offset, s_offset, step + 1);
      continue;
    }
    auto stops = linspace(0.0, dur, cfg.records_per_step + 1);
    evolve_diagonal(
        state, damped, stops,
        [&](const DiagonalState& d, double s) {
          record(d, t_offset + s / gamma, s_offset + s, step + 1);
        },
        cfg.ode);
    t_offset += dur / gamma;
    s_offset += dur;
  }

  res.final_joint_distribution = state.p;
  res.engine_detail = "master-equation/occupation-sector/b";

  ProtocolMetrics& m = res.metrics;
  m.fidelity = state.p(0, 0);
  m.mean_n_b1 = state.occupation(Factor::mode1);
  m.mean_n_b2 = state.occupation(Factor::mode2);
  m.mean_n_a1 = a_occupation_from_b(m.mean_n_b1, m.mean_n_b2, state.m12.real(), r);
  m.mean_n_a2 = a_occupation_from_b(m.mean_n_b2, m.mean_n_b1, state.m12.real(), r);
  m.leakage = state.leakage();
  m.epr_variance = std::exp(-2.0 * r) *
                   (2.0 * (1.0 + m.mean_n_b1 + m.mean_n_b2) - 4.0 * state.m12.real() -
                    2.0 * std::pow(state.m1.real() - state.m2.real(), 2) -
                    2.0 * std::pow(state.m1.imag() + state.m2.imag(), 2));
  if (m.leakage > kLeakageThreshold)
    res.diag.flag_truncation("protocol: final leakage " + std::to_string(m.leakage));
}

inline void run_me_dense_a(const ProtocolConfig& cfg, const ProtocolSetup& setup,
                           ProtocolResult& res) {
  const HilbertSpec& spec = setup.field_spec;
  Matrix rho = dense_initial_state(cfg, setup, &res.diag).density_matrix();
  const double gamma = setup.gamma, r = setup.r;

  // b-mode operators in a-basis coordinates: S^dag a_j S. The runs stay
  // in the interaction picture of H0, the frame the master equation is
  // written in; occupations and EPR are invariant to that choice.
  Operator s_op = squeeze_op(r, spec, &res.diag);
  Matrix b1 = s_op.mat.adjoint() * mode_annihilation(Factor::mode1, spec).mat * s_op.mat;
  Matrix b2 = s_op.mat.adjoint() * mode_annihilation(Factor::mode2, spec).mat * s_op.mat;
  Matrix nb1 = b1.adjoint() * b1, nb2 = b2.adjoint() * b2;

  auto record = [&](const Matrix& m, double t, double s, int step) {
    EventRecord e;
    e.t = t;
    e.s = s;
    e.step = step;
    e.nb1 = (nb1 * m).trace().real();
    e.nb2 = (nb2 * m).trace().real();
    e.na1 = occupation(m, spec, Factor::mode1);
    e.na2 = occupation(m, spec, Factor::mode2);
    e.leakage = top_level_population(m, spec);
    res.events.push_back(e);
  };

  double t_offset = 0, s_offset = 0;
  for (int step = 0; step < 2; ++step) {
    const Matrix& jump = (step == 0) ? b1 : b2;
    const Matrix& num = (step == 0) ? nb1 : nb2;
    double n0 = (num * rho).trace().real();
    double dur = step_duration_s(n0, cfg.n_bar_inf);
    (step == 0 ? res.metrics.n0_step1 : res.metrics.n0_step2) = n0;
    (step == 0 ? res.metrics.gammaT1 : res.metrics.gammaT2) = dur;
    if (dur == 0.0) {
      record(rho, t_offset, s_offset, step + 1);
      continue;
    }
    auto stops = linspace(0.0, dur, cfg.records_per_step + 1);
    lindblad_evolve_observed(
        rho, jump, stops,
        [&](const Matrix& m, double s) { record(m, t_offset + s / gamma, s_offset + s, step + 1); },
        cfg.ode);
    t_offset += dur / gamma;
    s_offset += dur;
  }

  rho = 0.5 * (rho + rho.adjoint().eval());
  res.final_state = QuantumState::density(spec, Basis::a, std::move(rho));
  res.engine_detail = "master-equation/dense/a";
}

// ---------------------------------------------------------------------------
// Stochastic engine: repeated single-atom kicks at Poisson arrival times.
// ---------------------------------------------------------------------------

struct TrajectorySummary {
  std::vector<double> rec_s;   // step-local gamma*t of each sample
  std::vector<int> rec_step;   // 1 or 2
  std::vector<double> nb1, nb2, na1, na2, leak;
  double fidelity = 0;  // final overlap with the squeezed target
  BMoments final_moments;
  Matrix final_rho;  // stored only for single-trajectory runs
  bool truncation_suspect = false;
};

struct StochasticShared {
  const ProtocolConfig* cfg = nullptr;
  const ProtocolSetup* setup = nullptr;
  double tau = 0, r_at = 0;
  std::array<double, 2> dur_s{0, 0};
  std::vector<double> grid_s;  // per-step-local gamma*t of each checkpoint
  std::vector<int> grid_step;  // 1 or 2
  Matrix rho0;
  bool record_each_kick = false;  // single-trajectory runs sample at every kick
  // b-basis path
  std::array<JcKickKraus, 2> kraus;
  // a-basis path
  std::array<Matrix, 2> kick_stay, kick_flip;  // <at|U|at_in>, <other|U|at_in>
  std::array<Matrix, 2> nb_op;
  Vector target_a;             // squeezed-vacuum target for a-basis fidelity
  Eigen::VectorXd phase_freq;  // free-rotation frequency per field index
  bool keep_final_rho = false;
};

inline void stochastic_kick_b(Matrix& rho, const StochasticShared& sh, int step,
                              std::mt19937_64& jitter_rng) {
  const ProtocolConfig& cfg = *sh.cfg;
  Factor damped = (step == 0) ? Factor::mode1 : Factor::mode2;
  if (cfg.reservoir.jitter_std > 0) {
    std::normal_distribution<double> dist(cfg.Omega, cfg.reservoir.jitter_std);
    double omega_kick = dist(jitter_rng);
    if (omega_kick <= 0)
      throw RegimeError("protocol: jittered Omega went non-positive; jitter_std is too large");
    double delta = (step == 0) ? sh.setup->Delta0 : -sh.setup->Delta0;
    DressedParams dp = squeeze_params(delta, omega_kick, cfg.g);
    const DressedParams& nominal = (step == 0) ? sh.setup->dressed_plus : sh.setup->dressed_minus;
    // Jitter enters as a coupling change and a dressed-splitting mismatch
    // (detuned kick); the small Bogoliubov-basis mismatch is neglected.
    // The entering atom carries -pi_z/2 of the mismatch in step 2.
    double eps = (step == 0) ? dp.d - nominal.d : nominal.d - dp.d;
    int n_max = (damped == Factor::mode1) ? sh.setup->field_spec.n_max1
                                          : sh.setup->field_spec.n_max2;
    JcKickKraus k = jc_kick_kraus(dp.Omega_b, sh.tau, n_max, eps);
    apply_jc_kick(rho, k, damped, sh.setup->field_spec);
  } else {
    apply_jc_kick(rho, sh.kraus[step], damped, sh.setup->field_spec);
  }
}

inline void free_rotate_a(Matrix& rho, const StochasticShared& sh, double dt) {
  // exp(+i (delta1 n1 + delta2 n2) dt) phases from the rotating-frame
  // field Hamiltonian; with delta1 = -delta2 = d these leave every
  // reported observable invariant but are kept for an honest state.
  if (dt == 0) return;
  Eigen::VectorXcd ph(sh.phase_freq.size());
  for (Eigen::Index k = 0; k < ph.size(); ++k)
    ph(k) = std::exp(cxd(0.0, sh.phase_freq(k) * dt));
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = 0; j < rho.cols(); ++j) rho(i, j) *= ph(i) * std::conj(ph(j));
}

inline void stochastic_kick_a(Matrix& rho, const StochasticShared& sh, int step,
                              std::mt19937_64& jitter_rng, Diagnostics* diag) {
  const ProtocolConfig& cfg = *sh.cfg;
  if (cfg.reservoir.jitter_std > 0) {
    std::normal_distribution<double> dist(cfg.Omega, cfg.reservoir.jitter_std);
    double omega_kick = dist(jitter_rng);
    if (omega_kick <= 0)
      throw RegimeError("protocol: jittered Omega went non-positive; jitter_std is too large");
    double delta = (step == 0) ? sh.setup->Delta0 : -sh.setup->Delta0;
    DressedParams dp = squeeze_params(delta, omega_kick, cfg.g);
    HilbertSpec with_atom = sh.setup->field_spec.with_atom();
    Matrix u = evolution_op(dressed_interaction_hamiltonian(dp, cfg.g, with_atom).mat, sh.tau, diag);
    long d_field = sh.setup->field_spec.dim();
    int in = (step == 0) ? 0 : 1;  // |+> enters step 1, |-> enters step 2
    Matrix stay(d_field, d_field), flip(d_field, d_field);
    for (long i = 0; i < d_field; ++i)
      for (long j = 0; j < d_field; ++j) {
        stay(i, j) = u(2 * i + in, 2 * j + in);
        flip(i, j) = u(2 * i + (1 - in), 2 * j + in);
      }
    rho = stay * rho * stay.adjoint() + flip * rho * flip.adjoint();
  } else {
    rho = sh.kick_stay[step] * rho * sh.kick_stay[step].adjoint() +
          sh.kick_flip[step] * rho * sh.kick_flip[step].adjoint();
  }
}

inline TrajectorySummary run_one_trajectory(const StochasticShared& sh, std::uint64_t index,
                                            Diagnostics* diag) {
  const ProtocolConfig& cfg = *sh.cfg;
  const HilbertSpec& spec = sh.setup->field_spec;
  const double gamma = sh.setup->gamma;
  const bool b_basis = (cfg.sim_basis == Basis::b);

  auto arr_rng = derived_rng(cfg.seed, index, RngPurpose::arrivals);
  auto jit_rng = derived_rng(cfg.seed, index, RngPurpose::jitter);

  TrajectorySummary out;
  Matrix rho = sh.rho0;

  auto sample = [&](double s_local, int step) {
    out.rec_s.push_back(s_local);
    out.rec_step.push_back(step + 1);
    if (b_basis) {
      BMoments m = b_moments(rho, spec);
      out.nb1.push_back(m.nb1);
      out.nb2.push_back(m.nb2);
      out.na1.push_back(a_occupation_from_b(m.nb1, m.nb2, m.pair.real(), sh.setup->r));
      out.na2.push_back(a_occupation_from_b(m.nb2, m.nb1, m.pair.real(), sh.setup->r));
    } else {
      out.nb1.push_back((sh.nb_op[0] * rho).trace().real());
      out.nb2.push_back((sh.nb_op[1] * rho).trace().real());
      out.na1.push_back(occupation(rho, spec, Factor::mode1));
      out.na2.push_back(occupation(rho, spec, Factor::mode2));
    }
    out.leak.push_back(top_level_population(rho, spec));
  };

  std::size_t g_idx = 0;
  for (int step = 0; step < 2; ++step) {
    double t_total = sh.dur_s[step] / gamma;
    std::vector<double> kicks =
        (t_total > 0) ? poisson_arrivals(sh.r_at, t_total, arr_rng) : std::vector<double>{};
    double t_last = 0;
    if (sh.record_each_kick) {
      sample(0.0, step);
      for (double t_kick : kicks) {
        if (b_basis) {
          stochastic_kick_b(rho, sh, step, jit_rng);
        } else {
          free_rotate_a(rho, sh, t_kick - t_last);
          stochastic_kick_a(rho, sh, step, jit_rng, diag);
          t_last = t_kick;
        }
        sample(gamma * t_kick, step);
      }
      if (!b_basis) free_rotate_a(rho, sh, t_total - t_last);
      sample(sh.dur_s[step], step);
    } else {
      std::size_t ki = 0;
      while (g_idx < sh.grid_s.size() && sh.grid_step[g_idx] == step + 1) {
        double t_check = sh.grid_s[g_idx] / gamma;
        while (ki < kicks.size() && kicks[ki] <= t_check) {
          if (b_basis) {
            stochastic_kick_b(rho, sh, step, jit_rng);
          } else {
            free_rotate_a(rho, sh, kicks[ki] - t_last);
            stochastic_kick_a(rho, sh, step, jit_rng, diag);
            t_last = kicks[ki];
          }
          ++ki;
        }
        if (!b_basis) {
          free_rotate_a(rho, sh, t_check - t_last);
          t_last = t_check;
        }
        sample(sh.grid_s[g_idx], step);
        ++g_idx;
      }
    }
  }

  out.final_moments = b_moments(rho, spec);
  if (b_basis)
    out.fidelity = rho(spec.index(0, 0), spec.index(0, 0)).real();
  else
    out.fidelity = (sh.target_a.adjoint() * rho * sh.target_a)(0, 0).real();
  if (!out.leak.empty() && out.leak.back() > kLeakageThreshold) out.truncation_suspect = true;
  if (sh.keep_final_rho) out.final_rho = rho;
  return out;
}

inline void run_stochastic(const ProtocolConfig& cfg, const ProtocolSetup& setup,
                           ProtocolResult& res) {
  if (!cfg.reservoir.r_at || !cfg.reservoir.tau)
    throw ConfigError("protocol: the stochastic engine needs r_at and tau (gamma alone is "
                      "not enough to place kicks)");
  StochasticShared sh;
  sh.cfg = &cfg;
  sh.setup = &setup;
  sh.tau = *cfg.reservoir.tau;
  sh.r_at = *cfg.reservoir.r_at;
  const HilbertSpec& spec = setup.field_spec;
  const bool b_basis = (cfg.sim_basis == Basis::b);
  const double gamma = setup.gamma, r = setup.r;

  QuantumState initial = dense_initial_state(cfg, setup, &res.diag);
  sh.rho0 = initial.density_matrix();
  sh.keep_final_rho = (cfg.trajectories == 1);
  sh.record_each_kick = (cfg.trajectories == 1);

  // Step durations from the derived formula, using the initial moments.
  std::array<double, 2> n0{};
  if (b_basis) {
    n0[0] = occupation(sh.rho0, spec, Factor::mode1);
    n0[1] = occupation(sh.rho0, spec, Factor::mode2);
  } else {
    Operator s_op = squeeze_op(r, spec, &res.diag);
    Matrix b1 = s_op.mat.adjoint() * mode_annihilation(Factor::mode1, spec).mat * s_op.mat;
    Matrix b2 = s_op.mat.adjoint() * mode_annihilation(Factor::mode2, spec).mat * s_op.mat;
    sh.nb_op[0] = b1.adjoint() * b1;
    sh.nb_op[1] = b2.adjoint() * b2;
    sh.target_a = tmsv_state(r, spec).vector();
    n0[0] = (sh.nb_op[0] * sh.rho0).trace().real();
    n0[1] = (sh.nb_op[1] * sh.rho0).trace().real();
  }
  sh.dur_s[0] = step_duration_s(n0[0], cfg.n_bar_inf);
  sh.dur_s[1] = step_duration_s(n0[1], cfg.n_bar_inf);
  res.metrics.n0_step1 = n0[0];
  res.metrics.n0_step2 = n0[1];
  res.metrics.gammaT1 = sh.dur_s[0];
  res.metrics.gammaT2 = sh.dur_s[1];

  // Shared checkpoint grid (per-step-local gamma*t).
  for (int step = 0; step < 2; ++step) {
    auto stops = linspace(0.0, sh.dur_s[step], cfg.records_per_step + 1);
    for (double s : stops) {
      sh.grid_s.push_back(s);
      sh.grid_step.push_back(step + 1);
    }
  }

  // Per-step kick operators (jitter-free path precomputes them once).
  if (b_basis) {
    sh.kraus[0] = jc_kick_kraus(setup.dressed_plus.Omega_b, sh.tau, spec.n_max1);
    sh.kraus[1] = jc_kick_kraus(setup.dressed_minus.Omega_b, sh.tau, spec.n_max2);
  } else {
    HilbertSpec with_atom = spec.with_atom();
    for (int step = 0; step < 2; ++step) {
      const DressedParams& dp = (step == 0) ? setup.dressed_plus : setup.dressed_minus;
      Matrix u = evolution_op(dressed_interaction_hamiltonian(dp, cfg.g, with_atom).mat, sh.tau,
                              &res.diag);
      long d_field = spec.dim();
      int in = (step == 0) ? 0 : 1;
      Matrix stay(d_field, d_field), flip(d_field, d_field);
      for (long i = 0; i < d_field; ++i)
        for (long j = 0; j < d_field; ++j) {
          stay(i, j) = u(2 * i + in, 2 * j + in);
          flip(i, j) = u(2 * i + (1 - in), 2 * j + in);
        }
      sh.kick_stay[step] = std::move(stay);
      sh.kick_flip[step] = std::move(flip);
    }
    sh.phase_freq.resize(spec.dim());
    ModeSetup ms = resonant_modes(setup.dressed_plus);
    for (int n1 = 0; n1 < spec.dim1(); ++n1)
      for (int n2 = 0; n2 < spec.dim2(); ++n2)
        sh.phase_freq(spec.index(n1, n2)) = ms.delta1 * n1 + ms.delta2 * n2;
  }

  // Trajectories are independent; slots keep the reduction order fixed so
  // the ensemble output is bit-identical however many threads run.
  const int n_traj = cfg.trajectories;
  std::vector<TrajectorySummary> slots(n_traj);
  std::vector<Diagnostics> traj_diags(n_traj);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    int k;
    while (!failed.load() && (k = next.fetch_add(1)) < n_traj) {
      try {
        slots[k] = run_one_trajectory(sh, static_cast<std::uint64_t>(k), &traj_diags[k]);
      } catch (const std::exception& e) {
        std::scoped_lock lock(err_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int n_threads = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n_traj)));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failed.load()) throw NumericsError("stochastic engine: " + first_error);
  for (auto& d : traj_diags) res.diag.merge(d);

  // Event rows: a single trajectory reports its own per-kick samples; an
  // ensemble reports grid-aligned means with standard errors (sequential
  // reduction over slots keeps the output independent of thread order).
  if (n_traj == 1) {
    const TrajectorySummary& t0 = slots[0];
    double s_offset = 0;
    for (std::size_t i = 0; i < t0.rec_s.size(); ++i) {
      if (i > 0 && t0.rec_step[i] == 2 && t0.rec_step[i - 1] == 1) s_offset = sh.dur_s[0];
      EventRecord e;
      e.step = t0.rec_step[i];
      e.s = s_offset + t0.rec_s[i];
      e.t = e.s / gamma;
      e.nb1 = t0.nb1[i];
      e.nb2 = t0.nb2[i];
      e.na1 = t0.na1[i];
      e.na2 = t0.na2[i];
      e.leakage = t0.leak[i];
      res.events.push_back(e);
    }
  } else {
    const std::size_t n_ck = sh.grid_s.size();
    auto mean_se = [&](auto getter, std::size_t i, double& mean, double& se) {
      double sum = 0, sum2 = 0;
      for (int k = 0; k < n_traj; ++k) {
        double v = getter(slots[k], i);
        sum += v;
        sum2 += v * v;
      }
      mean = sum / n_traj;
      se = std::sqrt(std::max(0.0, (sum2 / n_traj - mean * mean) / (n_traj - 1)));
    };

    double s_offset = 0;
    int step_prev = 1;
    for (std::size_t i = 0; i < n_ck; ++i) {
      if (sh.grid_step[i] != step_prev) {
        s_offset += sh.dur_s[0];
        step_prev = sh.grid_step[i];
      }
      EventRecord e;
      e.step = sh.grid_step[i];
      e.s = s_offset + sh.grid_s[i];
      e.t = e.s / gamma;
      double se_dummy;
      mean_se([](const TrajectorySummary& t, std::size_t j) { return t.nb1[j]; }, i, e.nb1,
              e.nb1_se);
      mean_se([](const TrajectorySummary& t, std::size_t j) { return t.nb2[j]; }, i, e.nb2,
              e.nb2_se);
      mean_se([](const TrajectorySummary& t, std::size_t j) { return t.na1[j]; }, i, e.na1,
              se_dummy);
      mean_se([](const TrajectorySummary& t, std::size_t j) { return t.na2[j]; }, i, e.na2,
              se_dummy);
      mean_se([](const TrajectorySummary& t, std::size_t j) { return t.leak[j]; }, i, e.leakage,
              se_dummy);
      res.events.push_back(e);
    }
  }

  res.engine_detail = b_basis ? "stochastic/kick/b" : "stochastic/kick/a";

  if (cfg.trajectories == 1) {
    Matrix rho = slots[0].final_rho;
    rho = 0.5 * (rho + rho.adjoint().eval());
    rho /= rho.trace().real();
    res.final_state = QuantumState::density(spec, cfg.sim_basis, std::move(rho),
                                            b_basis ? r : 0.0);
    return;  // metrics finalized from the state by the caller
  }

  // Ensemble metrics: everything reported is linear in rho, so means of
  // per-trajectory values are the mean-state values.
  ProtocolMetrics& m = res.metrics;
  double fsum = 0, fsum2 = 0;
  BMoments agg;
  double leak_sum = 0;
  for (const auto& t : slots) {
    fsum += t.fidelity;
    fsum2 += t.fidelity * t.fidelity;
    agg.nb1 += t.final_moments.nb1 / n_traj;
    agg.nb2 += t.final_moments.nb2 / n_traj;
    agg.pair += t.final_moments.pair / double(n_traj);
    agg.m1 += t.final_moments.m1 / double(n_traj);
    agg.m2 += t.final_moments.m2 / double(n_traj);
    leak_sum += t.leak.back() / n_traj;
    if (t.truncation_suspect) res.diag.truncation_suspect = true;
  }
  m.fidelity = fsum / n_traj;
  m.fidelity_se = (n_traj > 1)
                      ? std::sqrt(std::max(0.0, (fsum2 / n_traj - m.fidelity * m.fidelity) /
                                                    (n_traj - 1)))
                      : 0.0;
  if (b_basis) {
    m.mean_n_b1 = agg.nb1;
    m.mean_n_b2 = agg.nb2;
    m.mean_n_a1 = a_occupation_from_b(agg.nb1, agg.nb2, agg.pair.real(), r);
    m.mean_n_a2 = a_occupation_from_b(agg.nb2, agg.nb1, agg.pair.real(), r);
    m.epr_variance = std::exp(-2.0 * r) *
                     (2.0 * (1.0 + agg.nb1 + agg.nb2) - 4.0 * agg.pair.real() -
                      2.0 * std::pow(agg.m1.real() - agg.m2.real(), 2) -
                      2.0 * std::pow(agg.m1.imag() + agg.m2.imag(), 2));
  } else {
    m.mean_n_a1 = agg.nb1;  // in the a basis the native moments are a moments
    m.mean_n_a2 = agg.nb2;
    m.epr_variance = epr_variance_moments(agg.nb1, agg.nb2, agg.pair, agg.m1, agg.m2);
    m.mean_n_b1 = res.events.back().nb1;
    m.mean_n_b2 = res.events.back().nb2;
  }
  m.leakage = leak_sum;
}

/// Endpoint metrics for engines that produced a dense final state.
inline void finalize_dense_metrics(const ProtocolSetup& setup, ProtocolResult& res) {
  MetricsReport report = compute_metrics(*res.final_state, setup.r, &res.diag);
  ProtocolMetrics& m = res.metrics;
  m.leakage = report.leakage;
  m.mean_n_b1 = report.mean_n_b1;
  m.mean_n_b2 = report.mean_n_b2;
  m.mean_n_a1 = report.mean_n_a1;
  m.mean_n_a2 = report.mean_n_a2;
  m.fidelity = report.fidelity;
  m.epr_variance = report.epr_variance;
  m.log_negativity = report.log_negativity;
}

}  // namespace detail

/// Two-step steady-state protocol: step 1 (Delta = +Delta0, atoms in |+>)
/// damps b1 for T1 = gamma^-1 |log(n_inf/n0)|; step 2 (Delta = -Delta0,
/// atoms in |->) damps b2 likewise. Durations are derived, never free.
inline ProtocolResult run_protocol(const ProtocolConfig& cfg) {
  ProtocolResult res;
  ProtocolSetup setup = prepare_protocol(cfg, &res.diag);

  long joint_dim = setup.field_spec.dim();
  bool dense_ok = joint_dim <= cfg.max_joint_dim;

  if (cfg.engine == Engine::master_equation) {
    if (cfg.sim_basis == Basis::b) {
      if (dense_ok)
        detail::run_me_dense_b(cfg, setup, res);
      else
        detail::run_me_diagonal_b(cfg, setup, res);
    } else {
      if (!dense_ok)
        throw RegimeError("protocol: a-basis engine needs joint dimension " +
                          std::to_string(joint_dim) + " <= max_joint_dim (" +
                          std::to_string(cfg.max_joint_dim) + "); it is meant for small mu");
      detail::run_me_dense_a(cfg, setup, res);
    }
  } else {
    if (!dense_ok)
      throw RegimeError("protocol: stochastic engine needs joint dimension " +
                        std::to_string(joint_dim) + " <= max_joint_dim (" +
                        std::to_string(cfg.max_joint_dim) + ")");
    detail::run_stochastic(cfg, setup, res);
  }

  if (res.final_state) detail::finalize_dense_metrics(setup, res);

  ProtocolMetrics& m = res.metrics;
  m.gamma = setup.gamma;
  m.mu = cfg.mu;
  m.r_mu = setup.r;
  m.Omega_b = setup.dressed_plus.Omega_b;
  m.Delta0 = setup.Delta0;
  m.d = setup.dressed_plus.d;
  m.T1 = m.gammaT1 / setup.gamma;
  m.T2 = m.gammaT2 / setup.gamma;
  m.total_time = m.T1 + m.T2;
  return res;
}

/// One stochastic realization with records along the step grid (spec
/// operation); ensemble runs go through run_protocol with trajectories > 1.
inline ProtocolResult stochastic_trajectory(const ProtocolConfig& cfg) {
  ProtocolConfig single = cfg;
  single.engine = Engine::stochastic;
  single.trajectories = 1;
  return run_protocol(single);
}

}  // namespace tmsq
