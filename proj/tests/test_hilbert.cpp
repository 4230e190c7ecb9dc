// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "tmsq/hilbert.hpp"
#include "tmsq/state.hpp"

using namespace tmsq;

TEST_CASE("annihilation operator ladder action") {
  Matrix a = annihilation_op(1);
  Vector one = Vector::Zero(2);
  one(1) = 1.0;
  Vector lowered = a * one;
  REQUIRE(std::abs(lowered(0) - 1.0) < 1e-15);  // a|1> = |0>
  Vector zero = Vector::Zero(2);
  zero(0) = 1.0;
  REQUIRE((a * zero).norm() < 1e-15);  // a|0> = 0

  Matrix a3 = annihilation_op(3);
  REQUIRE(std::abs(a3(2, 3) - std::sqrt(3.0)) < 1e-12);
}

TEST_CASE("commutator [a, a^dag] = 1 below the cutoff") {
  const int n_max = 9;
  Matrix a = annihilation_op(n_max);
  Matrix comm = a * a.adjoint() - a.adjoint() * a;
  for (int n = 0; n < n_max; ++n) REQUIRE(std::abs(comm(n, n) - 1.0) < 1e-12);
  // the top level sees the truncation
  REQUIRE(std::abs(comm(n_max, n_max) + double(n_max)) < 1e-12);
}

TEST_CASE("annihilation operator rejects an empty ladder") {
  REQUIRE_THROWS_AS(annihilation_op(0), RegimeError);
}

TEST_CASE("embed places identity and keeps disjoint factors commuting") {
  HilbertSpec spec = HilbertSpec::modes(3, 4).with_atom();
  Operator ident = embed(Matrix::Identity(4, 4), Factor::mode1, spec);
  REQUIRE((ident.mat - Matrix::Identity(spec.dim(), spec.dim())).cwiseAbs().maxCoeff() < 1e-15);

  Operator a1 = mode_annihilation(Factor::mode1, spec);
  Operator a2 = mode_annihilation(Factor::mode2, spec);
  REQUIRE((a1.mat * a2.mat - a2.mat * a1.mat).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("embedded number operator picks out the right label") {
  HilbertSpec spec = HilbertSpec::modes(4, 4);
  Operator n1 = mode_number(Factor::mode1, spec);
  QuantumState fock = fock_state(spec, 2, 3);
  REQUIRE(std::abs(fock.expectation(n1) - 2.0) < 1e-14);
  Operator n2 = mode_number(Factor::mode2, spec);
  REQUIRE(std::abs(fock.expectation(n2) - 3.0) < 1e-14);
}

TEST_CASE("embed rejects a dimension mismatch") {
  HilbertSpec spec = HilbertSpec::modes(3, 4);
  REQUIRE_THROWS_AS(embed(Matrix::Identity(3, 3), Factor::mode1, spec), ConfigError);
  REQUIRE_THROWS_AS(embed(Matrix::Identity(2, 2), Factor::atom, spec), ConfigError);
}

TEST_CASE("partial trace over the atom restores the field state") {
  HilbertSpec spec = HilbertSpec::modes(2, 2).with_atom();
  HilbertSpec fspec = spec.without_atom();
  Vector field = Vector::Random(fspec.dim());
  field.normalize();
  Vector atom(2);
  atom << cxd(0.6, 0.0), cxd(0.0, 0.8);
  Matrix rho_full = kron(field * field.adjoint(), atom * atom.adjoint());
  Matrix reduced = partial_trace_atom(rho_full, spec);
  REQUIRE((reduced - field * field.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("state validation enforces norm and trace") {
  HilbertSpec spec = HilbertSpec::modes(2, 2);
  Vector bad = Vector::Ones(spec.dim());
  REQUIRE_THROWS_AS(QuantumState::pure(spec, Basis::a, bad), NumericsError);
  Matrix not_herm = Matrix::Zero(spec.dim(), spec.dim());
  not_herm(0, 1) = 1.0;
  not_herm(0, 0) = 1.0;
  REQUIRE_THROWS_AS(QuantumState::density(spec, Basis::a, not_herm), NumericsError);
}

TEST_CASE("recommended cutoff covers the geometric tail") {
  // population of the top level stays below the leakage threshold
  for (double n_bar : {0.1, 0.5, 2.0, 16.0}) {
    int n = recommended_cutoff(n_bar);
    double lambda = n_bar / (1.0 + n_bar);
    REQUIRE((1.0 - lambda) * std::pow(lambda, n) < kLeakageThreshold);
  }
  REQUIRE(recommended_cutoff(0.0) >= 2);
}
