#pragma once

// Post-processing metrics: RMSE between signals, relative difference of
// speeds, marker-based pendulum angle, average speed, stick-slip phases.

#include <span>
#include <vector>

#include "pcd/capsule_model.hpp"
#include "pcd/simulator.hpp"

namespace pcd {

/// Samples (t_i, v_i) with strictly increasing t.
struct SignalSeries {
  std::vector<double> t;
  std::vector<double> v;

  std::size_t size() const { return t.size(); }
};

/// Throws DomainError unless sizes match, the series is non-empty and t is
/// strictly increasing.
void validate(const SignalSeries& s);

/// Linear interpolation inside [t.front(), t.back()].
double interpolate(const SignalSeries& s, double t);

/// RMSE of `measured` against `reference` on the reference timestamps that
/// fall inside the measured support. Throws DomainError when none do.
double rmse(const SignalSeries& reference, const SignalSeries& measured);

/// RMSE per whole period [origin + kT, origin + (k+1)T) covered by the
/// reference samples; a trailing partial period is dropped.
std::vector<double> per_period_rmse(const SignalSeries& reference, const SignalSeries& measured,
                                    double period, double origin = 0.0);

/// |v_num - v_exp| / v_num * 100. Throws DomainError for v_num = 0.
double relative_difference(double v_num, double v_exp);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// atan((x1 - x2) / (y2 - y1)). Throws DomainError when y1 == y2.
double marker_angle(const Point2& o1, const Point2& o2);

/// distance / duration; throws DomainError for duration <= 0.
double average_speed(double distance, double duration);

/// Dimensionless distance over dimensionless time, in cm/s.
double average_speed_cm_per_s(double distance, double duration_tau, const ScalingContext& scaling);

struct PhaseSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  FrictionMode mode = FrictionMode::stick;

  double duration() const { return t_end - t_start; }
};

using PhaseSegmentation = std::vector<PhaseSegment>;

struct ModeSample {
  double t = 0.0;
  FrictionMode mode = FrictionMode::stick;
};

/// Sample i holds on [t_i, t_{i+1}); runs of equal mode are merged. The
/// segments tile [t_0, t_last] with shared endpoints.
PhaseSegmentation stick_slip_segments(std::span<const ModeSample> samples);
PhaseSegmentation stick_slip_segments(const Trajectory& trajectory);

}  // namespace pcd
