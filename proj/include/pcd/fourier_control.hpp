#pragma once

// Fourier-series control functions parametrized by shape (a direction on the
// unit hypersphere of harmonic amplitudes) and span (p, q placing the range
// inside the admissible interval).
//
//   u(t)   = a0/2 + sum_k [a_k cos(k w t) + b_k sin(k w t)]
//   uhat(t) = H . [cos(w t), sin(w t), ..., cos(K w t), sin(K w t)]
//
// The amplitude layout used throughout is interleaved: H = (a1, b1, a2, b2, ...).

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "pcd/capsule_model.hpp"

namespace pcd {

struct HarmonicBasis {
  int harmonics = 1;
  double omega = 1.0;

  double period() const { return 2.0 * std::numbers::pi / omega; }
  std::size_t amplitude_count() const { return 2 * static_cast<std::size_t>(harmonics); }
};

void validate(const HarmonicBasis& basis);

/// Hyperspherical angles phi_1..phi_{2K-1}; all but the last lie in [0, pi],
/// the last in [0, 2 pi).
struct ShapeCoordinates {
  std::vector<double> phi;
};

struct SpanParams {
  double p = 1.0;
  double q = 1.0;
};

struct ControlBounds {
  double u_min = -3.4;
  double u_max = 3.4;
};

/// A point of the control search space.
///
/// With `zero_start` the first angle is pinned to pi/2 and the first cosine
/// amplitude is solved so that u(0) = 0; it is then not part of the
/// optimization vector.
///
/// With `zero_drift` the control has zero mean (a0 = 0), so the angle is
/// periodic. The range is then fixed by a single scale: p is the fraction of
/// the largest amplitude that keeps u inside the bounds, and q is unused.
struct ControlParams {
  HarmonicBasis basis;
  ShapeCoordinates shape;
  SpanParams span;
  ControlBounds bounds;
  bool zero_start = false;
  bool zero_drift = false;

  /// 2K+1, less one for each of zero_start and zero_drift.
  std::size_t dimension() const;
  /// Optimization vector: free angles followed by p, q (p only with zero_drift).
  std::vector<double> to_point() const;
  /// Inverse of to_point for a given basis/bounds/zero_start template.
  static ControlParams from_point(std::span<const double> point, const HarmonicBasis& basis,
                                  const ControlBounds& bounds, bool zero_start,
                                  bool zero_drift = false);
  /// Box for the optimization vector, matching the coordinate intervals.
  static void point_bounds(const HarmonicBasis& basis, bool zero_start, bool zero_drift,
                           std::vector<double>& lower, std::vector<double>& upper);
};

void validate(const ControlParams& params);

struct FourierCoefficients {
  double a0 = 0.0;
  std::vector<double> a;
  std::vector<double> b;
  double omega = 1.0;

  int harmonics() const { return static_cast<int>(a.size()); }
};

/// Reconstructed control u = theta' with analytic angle and acceleration.
///
/// theta(0) = 0. Phases are evaluated from absolute time as (j omega) tau, so
/// extension past one period carries the drift a0 T / 2 per period without
/// accumulating phase error, and a law re-expressed at omega/2 with 2K
/// harmonics (see lifted()) evaluates to the same doubles.
class ControlLaw {
 public:
  ControlLaw() : ControlLaw(FourierCoefficients{0.0, {0.0}, {0.0}, 1.0}) {}
  explicit ControlLaw(FourierCoefficients coeffs);

  double speed(double tau) const;
  double angle(double tau) const;
  double accel(double tau) const;
  PendulumSample sample(double tau) const;
  /// Same as sample(tau) given precomputed cos/sin((j+1) omega tau).
  PendulumSample sample(double tau, std::span<const double> cos_j,
                        std::span<const double> sin_j) const;

  const FourierCoefficients& coefficients() const { return coeffs_; }
  int harmonics() const { return coeffs_.harmonics(); }
  double omega() const { return coeffs_.omega; }
  double period() const { return 2.0 * std::numbers::pi / coeffs_.omega; }
  /// Angle gained per period, a0 T / 2.
  double per_period_drift() const { return 0.5 * coeffs_.a0 * period(); }
  /// Constant fixing theta(0) = 0.
  double angle_offset() const { return angle_offset_; }
  /// Harmonic frequencies (j+1) omega, j = 0..K-1.
  std::span<const double> frequencies() const { return freq_; }

  /// Exact re-expression with 2K harmonics at omega/2 (odd harmonics zero).
  ControlLaw lifted() const;

 private:
  FourierCoefficients coeffs_;
  std::vector<double> freq_;
  std::vector<double> angle_sin_;  // a_k / (k w)
  std::vector<double> angle_cos_;  // -b_k / (k w)
  double angle_offset_ = 0.0;
};

/// cos and sin of freq * tau; the single place where harmonic phases are evaluated.
void harmonic_phase(double freq, double tau, double& c, double& s);

/// Unit amplitude vector (length 2K) from 2K-1 hyperspherical angles.
std::vector<double> unit_vector_from_angles(std::span<const double> phi);

/// Inverse of unit_vector_from_angles. Once the remaining tail is zero, the
/// remaining angles are 0.
std::vector<double> angles_from_unit_vector(std::span<const double> h);

/// uhat(t) for an amplitude vector of any norm.
double evaluate_hat(std::span<const double> h, double omega, double t);

struct HatExtremes {
  double min = 0.0;
  double max = 0.0;
};

/// Min and max of uhat over one period: dense grid of 4096 K points, then
/// golden-section refinement of every grid extremum near the global one.
/// Throws DegenerateShape for a (near) zero amplitude vector.
HatExtremes extremes_of_hat(std::span<const double> h, const HarmonicBasis& basis);

struct RangeTargets {
  double sup = 0.0;
  double inf = 0.0;
};

/// sup = p u_max + (1-p) u_min,  inf = q u_min + (1-q) sup.
RangeTargets range_targets(const SpanParams& span, const ControlBounds& bounds);

/// Solved amplitude vector (not normalized when zero_start solved h_1).
std::vector<double> shape_amplitudes(const ControlParams& params);

ControlLaw reconstruct(const ControlParams& params);

/// Next greedy stage: 2K harmonics at omega/2, p and q unchanged, same control.
ControlParams lift(const ControlParams& params);

}  // namespace pcd
