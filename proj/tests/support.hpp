#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pcd/fourier_control.hpp"

namespace pcd::test {

inline constexpr double kPi = std::numbers::pi;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random angles in their coordinate intervals.
inline std::vector<double> random_angles(std::mt19937_64& rng, int harmonics) {
  const auto n = static_cast<std::size_t>(2 * harmonics - 1);
  std::vector<double> phi(n);
  for (std::size_t i = 0; i < n; ++i) phi[i] = uniform(rng, 0.0, i + 1 == n ? 2 * kPi : kPi);
  return phi;
}

inline ControlParams random_params(std::mt19937_64& rng, int harmonics, bool zero_start = false,
                                   bool zero_drift = false) {
  ControlParams p;
  p.basis = {harmonics, uniform(rng, 0.25, 2.0)};
  p.shape.phi = random_angles(rng, harmonics);
  p.span = {uniform(rng, 0.05, 1.0), uniform(rng, 0.05, 1.0)};
  const double lo = uniform(rng, -5.0, -0.5);
  p.bounds = {lo, lo + uniform(rng, 1.0, 8.0)};
  if (zero_drift) p.bounds = {uniform(rng, -5.0, -0.5), uniform(rng, 0.5, 5.0)};
  p.zero_start = zero_start;
  p.zero_drift = zero_drift;
  if (zero_start) p.shape.phi[0] = kPi / 2;
  return p;
}

/// Samples of u over one period on an n-point grid.
inline std::vector<double> dense_speed(const ControlLaw& law, std::size_t n) {
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = law.speed(law.period() * i / n);
  return u;
}

}  // namespace pcd::test

namespace pcd::test {

/// A k=3 control found by the default optimizer run (seed 42).
inline ControlLaw optimized_k3() {
  FourierCoefficients c;
  c.omega = 1.0;
  c.a0 = 0.0;
  c.a = {0.013221186521120276, -0.022555338087111448, 0.009334151565991171};
  c.b = {0.12384085752809179, 0.26872494232153477, -1.9419513598796938};
  return ControlLaw(std::move(c));
}

inline ControlLaw law_from(double a0, std::vector<double> a, std::vector<double> b,
                           double omega = 1.0) {
  return ControlLaw(FourierCoefficients{a0, std::move(a), std::move(b), omega});
}

}  // namespace pcd::test
