// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tmsq/common.hpp"

namespace tmsq {

// Seed splitting: every consumer derives an independent mt19937_64 from
// (master seed, stream index, purpose) through splitmix64, so trajectories
// are reproducible individually and ensemble reduction order never matters.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class RngPurpose : std::uint64_t { arrivals = 0, jitter = 1 };

inline std::mt19937_64 derived_rng(std::uint64_t master_seed, std::uint64_t stream,
                                   RngPurpose purpose) {
  std::uint64_t s = splitmix64(master_seed ^ splitmix64(stream * 2 + 1));
  s = splitmix64(s ^ splitmix64(static_cast<std::uint64_t>(purpose) + 0x51ed2701ULL));
  return std::mt19937_64(s);
}

/// Sorted Poisson arrival times on [0, t_total] with mean rate r_at,
/// built from exponential gaps. Same seed, same sequence.
inline std::vector<double> poisson_arrivals(double r_at, double t_total, std::mt19937_64& rng) {
  if (r_at <= 0) throw RegimeError("poisson_arrivals: arrival rate must be > 0");
  if (t_total <= 0) throw RegimeError("poisson_arrivals: duration must be > 0");
  std::exponential_distribution<double> gap(r_at);
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(r_at * t_total * 1.2) + 16);
  double t = gap(rng);
  while (t < t_total) {
    times.push_back(t);
    t += gap(rng);
  }
  return times;
}

inline std::vector<double> poisson_arrivals(double r_at, double t_total, std::uint64_t seed) {
  auto rng = derived_rng(seed, 0, RngPurpose::arrivals);
  return poisson_arrivals(r_at, t_total, rng);
}

}  // namespace tmsq
