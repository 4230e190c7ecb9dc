// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "tmsq/common.hpp"

namespace tmsq {

enum class Factor { mode1 = 0, mode2 = 1, atom = 2 };

/// Truncated simulation space: mode1 (n_max1+1 levels) x mode2 x
/// optionally a two-level atom, in that fixed factor order.
struct HilbertSpec {
  int n_max1 = 1;
  int n_max2 = 1;
  bool include_atom = false;

  static HilbertSpec modes(int n1, int n2) {
    if (n1 < 1 || n2 < 1) throw RegimeError("HilbertSpec: photon-number cutoffs must be >= 1");
    return HilbertSpec{n1, n2, false};
  }
  HilbertSpec with_atom() const { return HilbertSpec{n_max1, n_max2, true}; }
  HilbertSpec without_atom() const { return HilbertSpec{n_max1, n_max2, false}; }

  int dim1() const { return n_max1 + 1; }
  int dim2() const { return n_max2 + 1; }
  int dim_atom() const { return include_atom ? 2 : 1; }
  long dim() const { return static_cast<long>(dim1()) * dim2() * dim_atom(); }

  // Flat index with mode1 slowest, atom fastest.
  long index(int n1, int n2, int s = 0) const {
    return (static_cast<long>(n1) * dim2() + n2) * dim_atom() + s;
  }

  bool operator==(const HilbertSpec& o) const = default;

  std::string describe() const {
    return "(" + std::to_string(n_max1) + "," + std::to_string(n_max2) +
           (include_atom ? ",atom)" : ")");
  }
};

/// Default cutoff for a target mean occupation: covers the geometric
/// tail of thermal/TMSV marginals. The 6-sigma rule alone undershoots
/// for large n_bar, so the geometric tail bound is applied as well.
inline int recommended_cutoff(double n_bar, double tail = kLeakageThreshold) {
  if (n_bar < 0) throw RegimeError("recommended_cutoff: negative occupation");
  int heuristic = static_cast<int>(std::ceil(n_bar + 6.0 * std::sqrt(n_bar * (n_bar + 1.0)) + 10.0));
  int geometric = 1;
  if (n_bar > 1e-12) {
    double lambda = n_bar / (1.0 + n_bar);
    // population of level N is (1-lambda) lambda^N; keep it below `tail`
    geometric = static_cast<int>(std::ceil(std::log(tail / (1.0 - lambda)) / std::log(lambda)));
  }
  return std::max({heuristic, geometric, 2});
}

/// Operator on a full HilbertSpec (square, dimension matched).
struct Operator {
  HilbertSpec spec;
  Matrix mat;

  Operator(HilbertSpec s, Matrix m) : spec(s), mat(std::move(m)) {
    if (mat.rows() != mat.cols()) throw ConfigError("Operator: matrix must be square");
    if (mat.rows() != spec.dim())
      throw ConfigError("Operator: dimension " + std::to_string(mat.rows()) +
                        " does not match spec " + spec.describe());
  }

  Operator dagger() const { return Operator(spec, mat.adjoint()); }
};

/// Single-mode lowering operator, <n-1|a|n> = sqrt(n).
inline Matrix annihilation_op(int n_max) {
  if (n_max < 1) throw RegimeError("annihilation_op: n_max must be >= 1 (no dynamics possible)");
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Matrix number_op(int n_max) {
  Matrix n = Matrix::Zero(n_max + 1, n_max + 1);
  for (int k = 0; k <= n_max; ++k) n(k, k) = k;
  return n;
}

// Dressed-basis atom operators; index 0 = |+>, 1 = |->.
inline Matrix atom_pi_plus() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}
inline Matrix atom_pi_minus() { return atom_pi_plus().adjoint(); }
inline Matrix atom_pi_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// op (x) identity on the other factors, in the fixed (mode1, mode2, atom) order.
inline Operator embed(const Matrix& op, Factor where, const HilbertSpec& spec) {
  int expected = 0;
  switch (where) {
    case Factor::mode1: expected = spec.dim1(); break;
    case Factor::mode2: expected = spec.dim2(); break;
    case Factor::atom:
      if (!spec.include_atom) throw ConfigError("embed: spec has no atom factor");
      expected = 2;
      break;
  }
  if (op.rows() != op.cols() || op.rows() != expected)
    throw ConfigError("embed: operator dimension " + std::to_string(op.rows()) +
                      " does not match factor of " + spec.describe());

  auto ident = [](int d) { return Matrix::Identity(d, d); };
  Matrix full;
  switch (where) {
    case Factor::mode1: full = kron(op, ident(spec.dim2())); break;
    case Factor::mode2: full = kron(ident(spec.dim1()), op); break;
    case Factor::atom: full = kron(ident(spec.dim1() * spec.dim2()), op); break;
  }
  if (spec.include_atom && where != Factor::atom) full = kron(full, ident(2));
  return Operator(spec, std::move(full));
}

inline Operator mode_annihilation(Factor mode, const HilbertSpec& spec) {
  int n_max = (mode == Factor::mode1) ? spec.n_max1 : spec.n_max2;
  return embed(annihilation_op(n_max), mode, spec);
}

inline Operator mode_number(Factor mode, const HilbertSpec& spec) {
  int n_max = (mode == Factor::mode1) ? spec.n_max1 : spec.n_max2;
  return embed(number_op(n_max), mode, spec);
}

/// Trace out the atom factor of a density matrix on spec-with-atom.
inline Matrix partial_trace_atom(const Matrix& rho, const HilbertSpec& spec) {
  if (!spec.include_atom) throw ConfigError("partial_trace_atom: spec has no atom factor");
  long d_field = spec.dim1() * static_cast<long>(spec.dim2());
  if (rho.rows() != spec.dim()) throw ConfigError("partial_trace_atom: dimension mismatch");
  Matrix out = Matrix::Zero(d_field, d_field);
  for (long i = 0; i < d_field; ++i)
    for (long j = 0; j < d_field; ++j)
      out(i, j) = rho(2 * i, 2 * j) + rho(2 * i + 1, 2 * j + 1);
  return out;
}

}  // namespace tmsq
