// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "tmsq/protocol.hpp"

using namespace tmsq;

namespace {
ProtocolConfig base_config(double mu) {
  ProtocolConfig cfg;
  cfg.mu = mu;
  cfg.Omega = 1.0;
  cfg.g = 0.02;
  cfg.reservoir.gamma_explicit = 1.0;
  cfg.n_bar_inf = 0.01;
  cfg.records_per_step = 8;
  cfg.seed = 11;
  return cfg;
}

ProtocolConfig beam_config(double mu, double omega_b_tau, double r_at_tau = 0.08) {
  ProtocolConfig cfg = base_config(mu);
  DressedParams dp = squeeze_params(drive_for_mu(mu, cfg.Omega, +1), cfg.Omega, cfg.g);
  cfg.reservoir = ReservoirParams{};
  cfg.reservoir.tau = omega_b_tau / dp.Omega_b;
  cfg.reservoir.r_at = r_at_tau / *cfg.reservoir.tau;
  cfg.engine = Engine::stochastic;
  return cfg;
}
}  // namespace

TEST_CASE("a target already at n_inf gives a zero-duration protocol") {
  ProtocolConfig cfg = base_config(0.5);
  double nb0 = 0.25 / 0.75;
  cfg.n_bar_inf = nb0 * (1.0 + 1e-12);
  ProtocolResult res = run_protocol(cfg);
  REQUIRE(res.metrics.gammaT1 == 0.0);
  REQUIRE(res.metrics.gammaT2 == 0.0);
  REQUIRE(res.metrics.total_time == 0.0);
  // state unchanged: occupations still at the initial value
  REQUIRE(std::abs(res.metrics.mean_n_b1 - nb0) < 1e-9);
  REQUIRE(std::abs(res.metrics.mean_n_a1) < 1e-9);
}

TEST_CASE("master-equation endpoint reaches the squeezed target") {
  ProtocolConfig cfg = base_config(0.5);
  ProtocolResult res = run_protocol(cfg);
  REQUIRE(res.engine_detail == "master-equation/dense/b");
  REQUIRE(res.metrics.gammaT1 == Catch::Approx(std::log((1.0 / 3.0) / 0.01)).epsilon(1e-6));
  REQUIRE(res.metrics.fidelity > 0.975);
  REQUIRE(res.metrics.epr_variance < 2.0);
  REQUIRE(res.metrics.mean_n_b1 == Catch::Approx(0.01).margin(1e-6));
  REQUIRE(res.metrics.mean_n_b2 == Catch::Approx(0.01).margin(1e-6));
  // step 1 never increases <b1^dag b1>
  double prev = 1e300;
  for (const EventRecord& e : res.events) {
    if (e.step != 1) continue;
    REQUIRE(e.nb1 <= prev + 1e-12);
    prev = e.nb1;
  }
  // times strictly increase across the record stream
  for (std::size_t i = 1; i < res.events.size(); ++i)
    REQUIRE(res.events[i].s >= res.events[i - 1].s - 1e-15);
}

TEST_CASE("master-equation runs are deterministic") {
  ProtocolConfig cfg = base_config(0.4);
  ProtocolResult a = run_protocol(cfg);
  ProtocolResult b = run_protocol(cfg);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    REQUIRE(a.events[i].nb1 == b.events[i].nb1);
    REQUIRE(a.events[i].nb2 == b.events[i].nb2);
  }
  REQUIRE(a.metrics.fidelity == b.metrics.fidelity);
}

TEST_CASE("reduced engine matches the dense engine away from its regime") {
  ProtocolConfig cfg = base_config(0.5);
  cfg.records_per_step = 4;
  ProtocolResult dense = run_protocol(cfg);
  ProtocolConfig forced = cfg;
  forced.max_joint_dim = 1;  // push the ME dispatch onto the reduced path
  ProtocolResult reduced = run_protocol(forced);
  REQUIRE(reduced.engine_detail == "master-equation/occupation-sector/b");
  REQUIRE(std::abs(reduced.metrics.fidelity - dense.metrics.fidelity) < 1e-7);
  REQUIRE(std::abs(reduced.metrics.mean_n_b1 - dense.metrics.mean_n_b1) < 1e-8);
  REQUIRE(std::abs(reduced.metrics.epr_variance - dense.metrics.epr_variance) < 1e-6);
  REQUIRE(std::abs(reduced.metrics.gammaT1 - dense.metrics.gammaT1) < 1e-7);
  for (std::size_t i = 0; i < dense.events.size(); ++i) {
    REQUIRE(std::abs(reduced.events[i].nb1 - dense.events[i].nb1) < 1e-8);
    REQUIRE(std::abs(reduced.events[i].na1 - dense.events[i].na1) < 1e-7);
  }
}

TEST_CASE("reduced engine refuses what it cannot represent") {
  ProtocolConfig cfg = base_config(0.5);
  cfg.max_joint_dim = 1;
  cfg.initial = InitialState::thermal(0.5);
  REQUIRE_THROWS_AS(run_protocol(cfg), RegimeError);
}

TEST_CASE("steady state is independent of the initial state") {
  ProtocolConfig cfg = base_config(0.5);
  cfg.records_per_step = 4;
  cfg.n_max1 = cfg.n_max2 = 22;
  ProtocolResult from_vacuum = run_protocol(cfg);
  cfg.initial = InitialState::thermal(0.4);
  ProtocolResult from_thermal = run_protocol(cfg);
  double td = trace_distance(from_vacuum.final_state->density_matrix(),
                             from_thermal.final_state->density_matrix());
  REQUIRE(td < 2.0 * cfg.n_bar_inf + 0.01);
}

TEST_CASE("fidelity agrees between the two bases") {
  ProtocolConfig cfg = base_config(0.4);
  cfg.records_per_step = 4;
  ProtocolResult res = run_protocol(cfg);
  const QuantumState& out = *res.final_state;
  double f_b = fidelity(out, vacuum_state(out.spec(), Basis::b, res.metrics.r_mu));
  QuantumState in_a = basis_transform(out, res.metrics.r_mu, Direction::b_to_a);
  double f_a = fidelity(in_a, tmsv_state(res.metrics.r_mu, out.spec()));
  REQUIRE(std::abs(f_a - f_b) < 1e-8);
}

TEST_CASE("a-basis master equation engine reproduces the b-basis run") {
  ProtocolConfig cfg = base_config(0.3);
  cfg.records_per_step = 4;
  cfg.n_max1 = cfg.n_max2 = 12;
  ProtocolResult in_b = run_protocol(cfg);
  cfg.sim_basis = Basis::a;
  ProtocolResult in_a = run_protocol(cfg);
  REQUIRE(in_a.engine_detail == "master-equation/dense/a");
  REQUIRE(std::abs(in_a.metrics.fidelity - in_b.metrics.fidelity) < 1e-5);
  REQUIRE(std::abs(in_a.metrics.mean_n_b1 - in_b.metrics.mean_n_b1) < 1e-6);
  REQUIRE(std::abs(in_a.metrics.mean_n_a1 - in_b.metrics.mean_n_a1) < 1e-5);
  REQUIRE(std::abs(in_a.metrics.epr_variance - in_b.metrics.epr_variance) < 1e-4);
  REQUIRE(std::abs(in_a.metrics.gammaT1 - in_b.metrics.gammaT1) < 1e-8);
}

TEST_CASE("stochastic trajectory with no arrivals leaves the state alone") {
  ProtocolConfig cfg = beam_config(0.5, 0.05);
  double nb0 = 0.25 / 0.75;
  cfg.n_bar_inf = nb0 * (1.0 + 1e-12);  // zero step durations, hence no kicks
  ProtocolResult res = stochastic_trajectory(cfg);
  REQUIRE(std::abs(res.metrics.mean_n_b1 - nb0) < 1e-9);
  REQUIRE(res.metrics.total_time == 0.0);
}

TEST_CASE("stochastic runs are reproducible and seed-sensitive") {
  ProtocolConfig cfg = beam_config(0.5, 0.05);
  cfg.trajectories = 4;
  cfg.records_per_step = 4;
  cfg.n_max1 = cfg.n_max2 = 9;
  ProtocolResult a = run_protocol(cfg);
  ProtocolResult b = run_protocol(cfg);
  REQUIRE(a.metrics.fidelity == b.metrics.fidelity);
  for (std::size_t i = 0; i < a.events.size(); ++i) REQUIRE(a.events[i].nb1 == b.events[i].nb1);
  cfg.seed += 1;
  ProtocolResult c = run_protocol(cfg);
  REQUIRE(a.metrics.fidelity != c.metrics.fidelity);
}

TEST_CASE("small ensemble tracks the master equation") {
  ProtocolConfig cfg = beam_config(0.5, 0.05);
  cfg.trajectories = 60;
  cfg.records_per_step = 5;
  cfg.n_max1 = cfg.n_max2 = 9;
  ProtocolResult st = run_protocol(cfg);
  ProtocolConfig mecfg = cfg;
  mecfg.engine = Engine::master_equation;
  mecfg.reservoir = ReservoirParams{};
  mecfg.reservoir.gamma_explicit = st.metrics.gamma;
  ProtocolResult me = run_protocol(mecfg);
  REQUIRE(st.events.size() == me.events.size());
  for (std::size_t i = 0; i < st.events.size(); ++i) {
    if (st.events[i].nb1_se <= 0) continue;
    REQUIRE(std::abs(st.events[i].nb1 - me.events[i].nb1) < 5.0 * st.events[i].nb1_se);
  }
  REQUIRE(std::abs(st.metrics.fidelity - me.metrics.fidelity) <
          5.0 * *st.metrics.fidelity_se + 1e-3);
}

TEST_CASE("drive jitter degrades the endpoint only marginally") {
  ProtocolConfig cfg = beam_config(0.5, 0.05);
  cfg.trajectories = 40;
  cfg.records_per_step = 4;
  cfg.n_max1 = cfg.n_max2 = 9;
  ProtocolResult clean = run_protocol(cfg);
  cfg.reservoir.jitter_std = 0.02 * cfg.Omega;  // paired seeds share arrival times
  ProtocolResult noisy = run_protocol(cfg);
  REQUIRE(clean.metrics.fidelity - noisy.metrics.fidelity < 0.02);
  REQUIRE(noisy.metrics.fidelity > 0.9);
}

TEST_CASE("single stochastic trajectory records every kick") {
  ProtocolConfig cfg = beam_config(0.5, 0.1, 0.05);
  cfg.n_bar_inf = 0.1;
  cfg.n_max1 = cfg.n_max2 = 9;
  ProtocolResult res = stochastic_trajectory(cfg);
  // events = kicks + step boundaries; kick times strictly inside steps
  REQUIRE(res.events.size() > 10);
  for (std::size_t i = 1; i < res.events.size(); ++i)
    REQUIRE(res.events[i].s >= res.events[i - 1].s - 1e-12);
  REQUIRE(res.final_state.has_value());
}

TEST_CASE("an explicit initial state drives the derived durations") {
  ProtocolConfig cfg = base_config(0.5);
  cfg.records_per_step = 4;
  HilbertSpec spec = HilbertSpec::modes(12, 12);
  cfg.initial = InitialState::explicit_state(fock_state(spec, 2, 1, Basis::b, std::atanh(0.5)));
  ProtocolResult res = run_protocol(cfg);
  REQUIRE(res.metrics.n0_step1 == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(res.metrics.n0_step2 == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(res.metrics.gammaT1 == Catch::Approx(std::log(2.0 / 0.01)).epsilon(1e-9));
  REQUIRE(res.metrics.gammaT2 == Catch::Approx(std::log(1.0 / 0.01)).epsilon(1e-9));
  REQUIRE(res.metrics.fidelity > 0.95);
}

TEST_CASE("the stochastic engine needs the beam description") {
  ProtocolConfig cfg = base_config(0.5);  // gamma only
  cfg.engine = Engine::stochastic;
  REQUIRE_THROWS_AS(run_protocol(cfg), ConfigError);
}

TEST_CASE("rwa_error vanishes with the coupling and scales linearly") {
  const double mu = 0.3;
  double Delta = drive_for_mu(mu, 1.0, +1);
  double d = squeeze_params(Delta, 1.0, 1e-6).d;
  HilbertSpec spec = HilbertSpec::modes(7, 7).with_atom();
  double g = 0.01 * d;
  DressedParams dp = squeeze_params(Delta, 1.0, g);
  REQUIRE(rwa_error(dp, 0.0, spec, 1.0) == 0.0);
  double tau = 0.1 / dp.Omega_b;
  double e1 = rwa_error(dp, g, spec, tau);
  DressedParams dp_half = squeeze_params(Delta, 1.0, g / 2);
  double e2 = rwa_error(dp_half, g / 2, spec, tau);
  REQUIRE(e1 / e2 > 1.5);
  REQUIRE(e1 / e2 < 3.0);
  // saturated first-order magnitude: below ~g/d in trace distance
  REQUIRE(e1 < g / d);
}
