#include "pcd/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "pcd/error.hpp"

namespace pcd {

void validate(const SignalSeries& s) {
  if (s.t.size() != s.v.size()) throw DomainError("series: t and v differ in length");
  if (s.t.empty()) throw DomainError("series: empty");
  for (std::size_t i = 1; i < s.t.size(); ++i)
    if (!(s.t[i] > s.t[i - 1])) throw DomainError("series: t must be strictly increasing");
}

double interpolate(const SignalSeries& s, double t) {
  if (t < s.t.front() || t > s.t.back()) throw DomainError("interpolate: t outside support");
  const auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
  const auto i = static_cast<std::size_t>(it - s.t.begin());
  if (s.t[i] == t) return s.v[i];
  const double w = (t - s.t[i - 1]) / (s.t[i] - s.t[i - 1]);
  return s.v[i - 1] + w * (s.v[i] - s.v[i - 1]);
}

namespace {

// Squared differences on the reference timestamps inside the measured support;
// NaN marks timestamps outside it.
std::vector<double> squared_errors(const SignalSeries& reference, const SignalSeries& measured) {
  validate(reference);
  validate(measured);
  std::vector<double> out(reference.size(), NAN);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = reference.t[i];
    if (t < measured.t.front() || t > measured.t.back()) continue;
    const double d = interpolate(measured, t) - reference.v[i];
    out[i] = d * d;
  }
  return out;
}

}  // namespace

double rmse(const SignalSeries& reference, const SignalSeries& measured) {
  const std::vector<double> sq = squared_errors(reference, measured);
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : sq) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n == 0) throw DomainError("rmse: series do not overlap");
  return std::sqrt(sum / static_cast<double>(n));
}

std::vector<double> per_period_rmse(const SignalSeries& reference, const SignalSeries& measured,
                                    double period, double origin) {
  if (!(period > 0.0)) throw DomainError("per_period_rmse: period must be > 0");
  const std::vector<double> sq = squared_errors(reference, measured);
  const double span = reference.t.back() - origin;
  if (span < period * (1.0 - 1e-12)) return {};
  const auto periods = static_cast<std::size_t>(std::floor(span / period + 1e-9));
  std::vector<double> sum(periods, 0.0);
  std::vector<std::size_t> count(periods, 0);
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double rel = reference.t[i] - origin;
    if (rel < 0.0 || std::isnan(sq[i])) continue;
    const auto k = static_cast<std::size_t>(std::floor(rel / period));
    if (k >= periods) continue;
    sum[k] += sq[i];
    ++count[k];
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < periods; ++k) {
    if (count[k] == 0) throw DomainError("per_period_rmse: period without samples");
    out.push_back(std::sqrt(sum[k] / static_cast<double>(count[k])));
  }
  return out;
}

double relative_difference(double v_num, double v_exp) {
  if (v_num == 0.0) throw DomainError("relative_difference: v_num is zero");
  return std::abs(v_num - v_exp) / v_num * 100.0;
}

double marker_angle(const Point2& o1, const Point2& o2) {
  if (o2.y == o1.y) throw DomainError("markers horizontally aligned");
  return std::atan((o1.x - o2.x) / (o2.y - o1.y));
}

double average_speed(double distance, double duration) {
  if (!(duration > 0.0)) throw DomainError("average_speed: duration must be > 0");
  return distance / duration;
}

double average_speed_cm_per_s(double distance, double duration_tau,
                              const ScalingContext& scaling) {
  if (!(duration_tau > 0.0)) throw DomainError("average_speed: duration must be > 0");
  return average_speed(100.0 * scaling.to_metres(distance), scaling.to_seconds(duration_tau));
}

PhaseSegmentation stick_slip_segments(std::span<const ModeSample> samples) {
  PhaseSegmentation out;
  if (samples.empty()) return out;
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t > samples[i - 1].t))
      throw DomainError("segments: time must be strictly increasing");
  out.push_back({samples[0].t, samples[0].t, samples[0].mode});
  for (std::size_t i = 1; i < samples.size(); ++i) {
    out.back().t_end = samples[i].t;
    // The last sample only closes the previous interval.
    if (i + 1 < samples.size() && samples[i].mode != out.back().mode)
      out.push_back({samples[i].t, samples[i].t, samples[i].mode});
  }
  return out;
}

PhaseSegmentation stick_slip_segments(const Trajectory& trajectory) {
  std::vector<ModeSample> samples;
  samples.reserve(trajectory.size());
  for (const auto& r : trajectory) samples.push_back({r.tau, r.mode});
  return stick_slip_segments(samples);
}

}  // namespace pcd
