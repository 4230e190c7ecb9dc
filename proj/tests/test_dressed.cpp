// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "tmsq/dressed.hpp"

using namespace tmsq;

TEST_CASE("resonant drive gives symmetric dressed states") {
  DressedParams p = dressed_states(0.0, 1.0);
  REQUIRE(std::abs(p.d - 2.0) < 1e-14);
  REQUIRE(std::abs(p.theta - M_PI / 4) < 1e-14);
  REQUIRE(std::abs(p.energy_plus - 1.0) < 1e-14);
  REQUIRE(std::abs(p.energy_minus + 1.0) < 1e-14);
}

TEST_CASE("detuned drive matches the direct eigensystem") {
  DressedParams p = dressed_states(3.0, 2.0);
  REQUIRE(std::abs(p.d - 5.0) < 1e-14);
  REQUIRE(std::abs(std::tan(p.theta) - 2.0) < 1e-14);
  REQUIRE(std::abs(p.energy_plus - 1.0) < 1e-13);
  REQUIRE(std::abs(p.energy_minus + 4.0) < 1e-13);

  auto t = oracle::dressed_eigensystem(3.0, 2.0);
  REQUIRE(std::abs(p.energy_plus - t.e_plus) < 1e-12);
  REQUIRE(std::abs(p.energy_minus - t.e_minus) < 1e-12);
  // |+> = sin(theta)|g> + cos(theta)|e> up to the solver's sign choice
  double overlap = std::abs(p.sin_theta * t.v_plus(0) + p.cos_theta * t.v_plus(1));
  REQUIRE(std::abs(overlap - 1.0) < 1e-12);
}

TEST_CASE("dressed vectors satisfy the eigenvalue equation for random drives") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> delta(-8.0, 8.0), omega(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    double D = delta(rng), W = omega(rng);
    DressedParams p = dressed_states(D, W);
    Eigen::Matrix2d h;
    h << 0.0, W, W, -D;  // {|g>, |e>} block of the drive coupling
    Eigen::Vector2d plus(p.sin_theta, p.cos_theta), minus(p.cos_theta, -p.sin_theta);
    REQUIRE((h * plus - p.energy_plus * plus).norm() < 1e-12 * p.d);
    REQUIRE((h * minus - p.energy_minus * minus).norm() < 1e-12 * p.d);
    REQUIRE(std::abs(plus.squaredNorm() - 1.0) < 1e-12);
  }
}

TEST_CASE("squeeze parameter chain") {
  SECTION("mu = 0.97 gives the quoted squeezing") {
    double Delta = drive_for_mu(0.97, 1.0, +1);
    DressedParams p = squeeze_params(Delta, 1.0, 0.01);
    REQUIRE(std::abs(p.mu - 0.97) < 1e-12);
    REQUIRE(std::abs(p.r_mu - 2.0923) < 5e-4);
  }
  SECTION("worked example Delta=3, Omega=2, g=1") {
    DressedParams p = squeeze_params(3.0, 2.0, 1.0);
    REQUIRE(std::abs(p.mu - 0.25) < 1e-14);
    REQUIRE(std::abs(p.r_mu - 0.2554) < 1e-4);
    REQUIRE(std::abs(p.Omega_b - std::sqrt(0.75 / 1.25)) < 1e-14);
  }
  SECTION("Delta = 0 is rejected") {
    REQUIRE_THROWS_AS(squeeze_params(0.0, 1.0, 1.0), RegimeError);
  }
  SECTION("the near-degenerate band is rejected distinctly") {
    // tan(theta) = 1 sits exactly at Delta = 0; approach it from the side
    double Delta = drive_for_mu(1.0 - 1e-9, 1.0, +1);
    REQUIRE_THROWS_AS(squeeze_params(Delta, 1.0, 1.0), RegimeError);
  }
}

TEST_CASE("mode frequencies sit on the Rabi sidebands") {
  ModeSetup m = mode_frequencies(100.0, 0.0, 1.0);
  REQUIRE(std::abs(m.omega1 - 98.0) < 1e-12);
  REQUIRE(std::abs(m.omega2 - 102.0) < 1e-12);

  ModeSetup m2 = mode_frequencies(7.0, 3.0, 2.0);
  REQUIRE(std::abs(m2.delta1 - 5.0) < 1e-12);
  REQUIRE(std::abs(m2.delta2 + 5.0) < 1e-12);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> delta(-5.0, 5.0), omega(0.1, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    double wl = 50.0 + delta(rng);
    ModeSetup ms = mode_frequencies(wl, delta(rng), omega(rng));
    REQUIRE(std::abs((ms.omega2 - wl) - (wl - ms.omega1)) < 1e-10);
  }
}

TEST_CASE("drive_for_mu inverts the squeezing map") {
  SECTION("worked example") {
    double Delta = drive_for_mu(0.97, 1.0, +1);
    REQUIRE(std::abs(Delta - 0.030461) < 1e-6);
  }
  SECTION("mu -> 1 pushes Delta -> 0") {
    REQUIRE(std::abs(drive_for_mu(1.0 - 1e-9, 2.0, +1)) < 1e-4);
  }
  SECTION("round trip over random targets") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mu_dist(0.05, 0.95), omega(0.2, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
      double mu = mu_dist(rng), W = omega(rng);
      int sign = (trial % 2) ? +1 : -1;
      double Delta = drive_for_mu(mu, W, sign);
      REQUIRE(std::abs(squeeze_params(Delta, W, 0.01).mu - mu) < 1e-10);
      REQUIRE(((Delta > 0) ? +1 : -1) == sign);
    }
  }
  SECTION("rejects targets outside (0, 1)") {
    REQUIRE_THROWS_AS(drive_for_mu(1.0, 1.0, +1), RegimeError);
    REQUIRE_THROWS_AS(drive_for_mu(0.0, 1.0, +1), RegimeError);
  }
}

TEST_CASE("the two branches of the mu rule agree") {
  // tan(theta) <-> 1/tan(theta) under Delta -> -Delta at fixed |Delta|
  for (double mu : {0.1, 0.4, 0.8}) {
    DressedParams plus = squeeze_params(drive_for_mu(mu, 1.0, +1), 1.0, 0.02);
    DressedParams minus = squeeze_params(drive_for_mu(mu, 1.0, -1), 1.0, 0.02);
    REQUIRE(std::abs(plus.mu - minus.mu) < 1e-12);
    REQUIRE(std::abs(plus.r_mu - minus.r_mu) < 1e-12);
    REQUIRE(std::abs(plus.Omega_b - minus.Omega_b) < 1e-12);
    REQUIRE(plus.delta_sign == 1);
    REQUIRE(minus.delta_sign == -1);
    double t_plus = std::tan(plus.theta), t_minus = std::tan(minus.theta);
    REQUIRE(std::abs(t_plus * t_minus - 1.0) < 1e-10);
  }
}

TEST_CASE("Omega_b recovers g at weak squeezing and vanishes at mu -> 1") {
  double prev = 0.0;
  for (double mu : {0.9, 0.6, 0.3, 0.1, 0.01, 1e-4}) {
    DressedParams p = squeeze_params(drive_for_mu(mu, 1.0, +1), 1.0, 0.5);
    REQUIRE(p.Omega_b > prev);  // monotone toward g
    prev = p.Omega_b;
  }
  REQUIRE(std::abs(prev - 0.5) < 1e-3);
  DressedParams near_one = squeeze_params(drive_for_mu(0.999, 1.0, +1), 1.0, 0.5);
  REQUIRE(near_one.Omega_b < 0.02);
}

TEST_CASE("regime flag tracks g/d") {
  DressedParams ok = squeeze_params(3.0, 2.0, 0.2);  // g/d = 0.04
  REQUIRE(ok.regime_ok);
  Diagnostics diag;
  DressedParams bad = squeeze_params(3.0, 2.0, 1.0, &diag);  // g/d = 0.2
  REQUIRE_FALSE(bad.regime_ok);
  REQUIRE_FALSE(diag.warnings.empty());
}

TEST_CASE("drive validation flags a weakly saturating drive") {
  Diagnostics diag;
  DriveParams weak{1.0, 0.5, 0.3, {}, {}};
  weak.validate(&diag);
  REQUIRE_FALSE(diag.warnings.empty());
  DriveParams inconsistent{1.0, 0.01, 0.3, 10.0, 10.5};
  REQUIRE_THROWS_AS(inconsistent.validate(nullptr), ConfigError);
}
