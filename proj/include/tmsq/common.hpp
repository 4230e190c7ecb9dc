// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tmsq {

using cxd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cxd I_UNIT{0.0, 1.0};

/// Configuration or input-file problem; maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physically meaningless parameter regime (mu = 1, Delta = 0, ...);
/// maps to CLI exit code 2.
class RegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: truncation leakage, integrator breakdown;
/// maps to CLI exit code 3.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Accumulates non-fatal warnings raised while building operators or
/// running an engine. Results carry a copy so callers can inspect what
/// happened; `truncation_suspect` is set when the leakage rule fired.
struct Diagnostics {
  std::vector<std::string> warnings;
  bool truncation_suspect = false;

  void warn(const std::string& msg) { warnings.push_back(msg); }
  void flag_truncation(const std::string& msg) {
    truncation_suspect = true;
    warnings.push_back(msg);
  }
  void merge(const Diagnostics& other) {
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
    truncation_suspect = truncation_suspect || other.truncation_suspect;
  }
};

inline void warn_into(Diagnostics* diag, const std::string& msg) {
  if (diag) diag->warn(msg);
}

/// Population allowed in the top Fock level of either mode before a
/// result is marked truncation-suspect.
inline constexpr double kLeakageThreshold = 1e-6;

}  // namespace tmsq
