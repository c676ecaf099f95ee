#include "pcd/fourier_control.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "pcd/error.hpp"

namespace pcd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGridPerHarmonic = 4096;
constexpr double kGoldenTolerance = 1e-10;  // relative to the period
constexpr std::size_t kMaxRefinedCandidates = 32;
// Search bracket and tolerances for the zero-start first amplitude.
constexpr double kFirstAmplitudeBracket = 3.0;
constexpr double kZeroStartTolerance = 1e-10;
constexpr double kZeroStartPolish = 1e-12;
constexpr double kSpanParamFloor = 1e-6;

struct UnitCircle {
  std::vector<double> cos;
  std::vector<double> sin;
};

// cos/sin(2 pi m / n), m = 0..n-1, shared between calls.
const UnitCircle& unit_circle(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<UnitCircle>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<UnitCircle>();
    slot->cos.resize(n);
    slot->sin.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double x = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n);
      slot->cos[m] = std::cos(x);
      slot->sin[m] = std::sin(x);
    }
  }
  return *slot;
}

// uhat on the dense grid split as first * cos(w t_i) + rest_i, so the first
// cosine amplitude can be varied cheaply while solving the zero-start condition.
class HatGrid {
 public:
  HatGrid(std::span<const double> h, const HarmonicBasis& basis)
      : h_(h.begin(), h.end()), basis_(basis) {
    const auto K = static_cast<std::size_t>(basis.harmonics);
    n_ = kGridPerHarmonic * K;
    const UnitCircle& circle = unit_circle(n_);
    cos1_ = &circle.cos;
    rest_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = h_[1] * circle.sin[i];
      for (std::size_t k = 2; k <= K; ++k) {
        const std::size_t m = (k * i) % n_;
        acc += h_[2 * k - 2] * circle.cos[m] + h_[2 * k - 1] * circle.sin[m];
      }
      rest_[i] = acc;
    }
    values_.resize(n_);
    rest_at_zero_ = 0.0;
    for (std::size_t k = 2; k <= K; ++k) rest_at_zero_ += h_[2 * k - 2];
  }

  double hat_at_zero(double first) const { return first + rest_at_zero_; }

  HatExtremes extremes(double first) {
    double gmax = -INFINITY;
    double gmin = INFINITY;
    for (std::size_t i = 0; i < n_; ++i) {
      const double v = first * (*cos1_)[i] + rest_[i];
      values_[i] = v;
      gmax = std::max(gmax, v);
      gmin = std::min(gmin, v);
    }
    if (!(gmax > gmin)) throw DegenerateShape();
    const double slack = 1e-4 * (gmax - gmin);
    HatExtremes out{gmin, gmax};
    out.max = std::max(gmax, refine(first, gmax - slack, +1.0));
    out.min = -std::max(-gmin, refine(first, -(gmin + slack), -1.0));
    return out;
  }

 private:
  double eval(double first, double t) const {
    double c = 0.0, s = 0.0;
    harmonic_phase(basis_.omega, t, c, s);
    double acc = first * c + h_[1] * s;
    for (int k = 2; k <= basis_.harmonics; ++k) {
      harmonic_phase(static_cast<double>(k) * basis_.omega, t, c, s);
      acc += h_[2 * k - 2] * c + h_[2 * k - 1] * s;
    }
    return acc;
  }

  // Best refined value of sense * uhat over grid local maxima of sense * uhat
  // that lie above `threshold`.
  double refine(double first, double threshold, double sense) {
    candidates_.clear();
    for (std::size_t i = 0; i < n_; ++i) {
      const double v = sense * values_[i];
      if (v < threshold) continue;
      const double prev = sense * values_[(i + n_ - 1) % n_];
      const double next = sense * values_[(i + 1) % n_];
      if (v >= prev && v >= next) candidates_.push_back(i);
    }
    if (candidates_.size() > kMaxRefinedCandidates) {
      std::partial_sort(candidates_.begin(), candidates_.begin() + kMaxRefinedCandidates,
                        candidates_.end(), [&](std::size_t x, std::size_t y) {
                          return sense * values_[x] > sense * values_[y];
                        });
      candidates_.resize(kMaxRefinedCandidates);
    }
    const double period = basis_.period();
    const double dt = period / static_cast<double>(n_);
    const double tol = kGoldenTolerance * period;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double best = -INFINITY;
    for (std::size_t i : candidates_) {
      double a = (static_cast<double>(i) - 1.0) * dt;
      double b = (static_cast<double>(i) + 1.0) * dt;
      double x1 = b - inv_phi * (b - a);
      double x2 = a + inv_phi * (b - a);
      double f1 = sense * eval(first, x1);
      double f2 = sense * eval(first, x2);
      while (b - a > tol) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + inv_phi * (b - a);
          f2 = sense * eval(first, x2);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - inv_phi * (b - a);
          f1 = sense * eval(first, x1);
        }
      }
      best = std::max({best, f1, f2});
    }
    return best;
  }

  std::vector<double> h_;
  HarmonicBasis basis_;
  std::size_t n_ = 0;
  const std::vector<double>* cos1_ = nullptr;
  std::vector<double> rest_;
  std::vector<double> values_;
  std::vector<std::size_t> candidates_;
  double rest_at_zero_ = 0.0;
};

struct SolvedShape {
  std::vector<double> h;
  HatExtremes extremes;
};

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Amplitudes and extremes of the shape; with zero_start the first cosine
// amplitude is solved so the reconstructed control starts at 0.
SolvedShape solve_shape(const ControlParams& params) {
  SolvedShape out;
  out.h = unit_vector_from_angles(params.shape.phi);
  if (!params.zero_start) {
    if (norm2(out.h) < 1e-12) throw DegenerateShape();
    HatGrid grid(out.h, params.basis);
    out.extremes = grid.extremes(out.h[0]);
    return out;
  }

  out.h[0] = 0.0;
  if (params.zero_drift) {
    // Zero mean: u(0) = 0 reduces to uhat(0) = 0.
    double first = 0.0;
    for (int k = 2; k <= params.basis.harmonics; ++k) first -= out.h[2 * k - 2];
    HatGrid grid(out.h, params.basis);
    out.extremes = grid.extremes(first);
    out.h[0] = first;
    return out;
  }
  const RangeTargets target = range_targets(params.span, params.bounds);
  HatGrid grid(out.h, params.basis);
  HatExtremes ext;
  auto start_value = [&](double first) {
    ext = grid.extremes(first);
    const double shape0 = (grid.hat_at_zero(first) - ext.min) / (ext.max - ext.min);
    return target.inf + (target.sup - target.inf) * shape0;
  };

  // The cascade itself gives h_1 = 0 for phi_1 = pi/2; keep it when it already works.
  double first = 0.0;
  double value = start_value(first);
  if (std::abs(value) > kZeroStartTolerance) {
    double lo = -kFirstAmplitudeBracket;
    double hi = kFirstAmplitudeBracket;
    double f_lo = start_value(lo);
    const double f_hi = start_value(hi);
    if (f_lo == 0.0) {
      first = lo;
    } else if (f_hi == 0.0) {
      first = hi;
    } else {
      if (sign(f_lo) == sign(f_hi)) throw InfeasibleZeroStart();
      for (int iter = 0; iter < 200; ++iter) {
        first = 0.5 * (lo + hi);
        const double f_mid = start_value(first);
        if (std::abs(f_mid) <= kZeroStartPolish || hi - lo < 1e-14) break;
        if (sign(f_mid) == sign(f_lo)) {
          lo = first;
          f_lo = f_mid;
        } else {
          hi = first;
        }
      }
    }
    value = start_value(first);
    if (!(std::abs(value) <= kZeroStartTolerance)) throw InfeasibleZeroStart();
  }
  out.h[0] = first;
  out.extremes = ext;
  return out;
}

}  // namespace

void validate(const HarmonicBasis& basis) {
  if (basis.harmonics < 1) throw ConfigError("basis.K", "must be >= 1");
  if (!(basis.omega > 0.0) || !std::isfinite(basis.omega))
    throw ConfigError("basis.omega", "must be > 0");
}

void validate(const ControlParams& params) {
  validate(params.basis);
  const std::size_t n = 2 * static_cast<std::size_t>(params.basis.harmonics) - 1;
  const auto& phi = params.shape.phi;
  if (phi.size() != n)
    throw ConfigError("shape.phi", "expected " + std::to_string(n) + " angles, got " +
                                       std::to_string(phi.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = (i + 1 == n) ? 2.0 * kPi : kPi;
    if (!(phi[i] >= 0.0 && phi[i] <= hi))
      throw ConfigError("shape.phi[" + std::to_string(i) + "]", "out of range");
  }
  if (!(params.span.p > 0.0 && params.span.p <= 1.0)) throw ConfigError("span.p", "must be in (0, 1]");
  if (!(params.span.q > 0.0 && params.span.q <= 1.0)) throw ConfigError("span.q", "must be in (0, 1]");
  if (!(params.bounds.u_min < params.bounds.u_max))
    throw ConfigError("bounds", "u_min must be < u_max");
  if (params.zero_drift && !(params.bounds.u_min < 0.0 && params.bounds.u_max > 0.0))
    throw ConfigError("bounds", "zero drift needs u_min < 0 < u_max");
}

std::size_t ControlParams::dimension() const {
  const auto K = static_cast<std::size_t>(basis.harmonics);
  return 2 * K + 1 - (zero_start ? 1 : 0) - (zero_drift ? 1 : 0);
}

std::vector<double> ControlParams::to_point() const {
  std::vector<double> x(shape.phi.begin() + (zero_start ? 1 : 0), shape.phi.end());
  x.push_back(span.p);
  if (!zero_drift) x.push_back(span.q);
  return x;
}

ControlParams ControlParams::from_point(std::span<const double> point, const HarmonicBasis& basis,
                                        const ControlBounds& bounds, bool zero_start,
                                        bool zero_drift) {
  ControlParams out;
  out.basis = basis;
  out.bounds = bounds;
  out.zero_start = zero_start;
  out.zero_drift = zero_drift;
  if (point.size() != out.dimension())
    throw ConfigError("point", "expected dimension " + std::to_string(out.dimension()));
  const std::size_t span_count = zero_drift ? 1 : 2;
  if (zero_start) out.shape.phi.push_back(kPi / 2.0);
  out.shape.phi.insert(out.shape.phi.end(), point.begin(), point.end() - span_count);
  out.span.p = point[point.size() - span_count];
  if (!zero_drift) out.span.q = point[point.size() - 1];
  return out;
}

void ControlParams::point_bounds(const HarmonicBasis& basis, bool zero_start, bool zero_drift,
                                 std::vector<double>& lower, std::vector<double>& upper) {
  const std::size_t n = 2 * static_cast<std::size_t>(basis.harmonics) - 1;
  lower.clear();
  upper.clear();
  for (std::size_t i = zero_start ? 1 : 0; i < n; ++i) {
    lower.push_back(0.0);
    upper.push_back(i + 1 == n ? 2.0 * kPi : kPi);
  }
  for (int j = 0; j < (zero_drift ? 1 : 2); ++j) {
    lower.push_back(kSpanParamFloor);
    upper.push_back(1.0);
  }
}

void harmonic_phase(double freq, double tau, double& c, double& s) {
  const double x = freq * tau;
  c = std::cos(x);
  s = std::sin(x);
}

ControlLaw::ControlLaw(FourierCoefficients coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.a.size() != coeffs_.b.size() || coeffs_.a.empty())
    throw ConfigError("coeffs", "a and b must have equal, positive length");
  if (!(coeffs_.omega > 0.0)) throw ConfigError("coeffs.omega", "must be > 0");
  const std::size_t K = coeffs_.a.size();
  freq_.resize(K);
  angle_sin_.resize(K);
  angle_cos_.resize(K);
  double offset = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    freq_[j] = static_cast<double>(j + 1) * coeffs_.omega;
    angle_sin_[j] = coeffs_.a[j] / freq_[j];
    angle_cos_[j] = -coeffs_.b[j] / freq_[j];
    offset += angle_cos_[j];
  }
  angle_offset_ = -offset;
}

PendulumSample ControlLaw::sample(double tau, std::span<const double> cos_j,
                                  std::span<const double> sin_j) const {
  double th = 0.0;
  double sp = 0.0;
  double ac = 0.0;
  const std::size_t K = freq_.size();
  for (std::size_t j = 0; j < K; ++j) {
    const double c = cos_j[j];
    const double s = sin_j[j];
    sp += coeffs_.a[j] * c + coeffs_.b[j] * s;
    th += angle_sin_[j] * s + angle_cos_[j] * c;
    ac += freq_[j] * (coeffs_.b[j] * c - coeffs_.a[j] * s);
  }
  PendulumSample out;
  out.theta = (0.5 * coeffs_.a0 * tau + angle_offset_) + th;
  out.theta_dot = 0.5 * coeffs_.a0 + sp;
  out.theta_ddot = ac;
  return out;
}

PendulumSample ControlLaw::sample(double tau) const {
  const std::size_t K = freq_.size();
  // Small fixed buffers cover every practical harmonic count without allocation.
  constexpr std::size_t kStack = 64;
  double cbuf[kStack], sbuf[kStack];
  std::vector<double> cheap, sheap;
  double* c = cbuf;
  double* s = sbuf;
  if (K > kStack) {
    cheap.resize(K);
    sheap.resize(K);
    c = cheap.data();
    s = sheap.data();
  }
  for (std::size_t j = 0; j < K; ++j) harmonic_phase(freq_[j], tau, c[j], s[j]);
  return sample(tau, std::span<const double>(c, K), std::span<const double>(s, K));
}

double ControlLaw::speed(double tau) const { return sample(tau).theta_dot; }
double ControlLaw::angle(double tau) const { return sample(tau).theta; }
double ControlLaw::accel(double tau) const { return sample(tau).theta_ddot; }

ControlLaw ControlLaw::lifted() const {
  FourierCoefficients next;
  next.a0 = coeffs_.a0;
  next.omega = 0.5 * coeffs_.omega;
  const std::size_t K = coeffs_.a.size();
  next.a.assign(2 * K, 0.0);
  next.b.assign(2 * K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    next.a[2 * k + 1] = coeffs_.a[k];
    next.b[2 * k + 1] = coeffs_.b[k];
  }
  return ControlLaw(std::move(next));
}

std::vector<double> unit_vector_from_angles(std::span<const double> phi) {
  const std::size_t n = phi.size() + 1;
  std::vector<double> h(n);
  double tail = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = tail * std::cos(phi[i]);
    tail *= std::sin(phi[i]);
  }
  h[n - 1] = tail;
  return h;
}

std::vector<double> angles_from_unit_vector(std::span<const double> h) {
  const std::size_t n = h.size();
  if (n < 2) throw DomainError("amplitude vector needs at least 2 components");
  std::vector<double> phi(n - 1, 0.0);
  // tail[i] = |h[i..n-1]|
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) tail[i] = std::hypot(tail[i + 1], h[i]);
  const double scale = tail[0];
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (tail[i] <= 1e-15 * scale) break;  // remaining angles stay 0
    phi[i] = std::atan2(tail[i + 1], h[i]);
  }
  if (tail[n - 2] > 1e-15 * scale) {
    double last = std::atan2(h[n - 1], h[n - 2]);
    if (last < 0.0) last += 2.0 * kPi;
    if (last >= 2.0 * kPi) last = 0.0;
    phi[n - 2] = last;
  }
  return phi;
}

double evaluate_hat(std::span<const double> h, double omega, double t) {
  double acc = 0.0;
  const std::size_t K = h.size() / 2;
  for (std::size_t k = 1; k <= K; ++k) {
    double c = 0.0, s = 0.0;
    harmonic_phase(static_cast<double>(k) * omega, t, c, s);
    acc += h[2 * k - 2] * c + h[2 * k - 1] * s;
  }
  return acc;
}

HatExtremes extremes_of_hat(std::span<const double> h, const HarmonicBasis& basis) {
  validate(basis);
  if (h.size() != basis.amplitude_count())
    throw DomainError("amplitude vector length does not match 2K");
  if (norm2(h) < 1e-12) throw DegenerateShape();
  HatGrid grid(h, basis);
  return grid.extremes(h[0]);
}

RangeTargets range_targets(const SpanParams& span, const ControlBounds& bounds) {
  RangeTargets out;
  out.sup = span.p * bounds.u_max + (1.0 - span.p) * bounds.u_min;
  out.inf = span.q * bounds.u_min + (1.0 - span.q) * out.sup;
  return out;
}

std::vector<double> shape_amplitudes(const ControlParams& params) {
  validate(params);
  return solve_shape(params).h;
}

ControlLaw reconstruct(const ControlParams& params) {
  validate(params);
  const SolvedShape shape = solve_shape(params);
  double scale = 0.0;
  double offset = 0.0;
  if (params.zero_drift) {
    const double largest = std::min(params.bounds.u_max / shape.extremes.max,
                                    params.bounds.u_min / shape.extremes.min);
    scale = params.span.p * largest;
  } else {
    const RangeTargets target = range_targets(params.span, params.bounds);
    scale = (target.sup - target.inf) / (shape.extremes.max - shape.extremes.min);
    offset = target.inf - scale * shape.extremes.min;
  }
  FourierCoefficients c;
  c.omega = params.basis.omega;
  c.a0 = 2.0 * offset;
  const auto K = static_cast<std::size_t>(params.basis.harmonics);
  c.a.resize(K);
  c.b.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    c.a[k] = scale * shape.h[2 * k];
    c.b[k] = scale * shape.h[2 * k + 1];
  }
  return ControlLaw(std::move(c));
}

ControlParams lift(const ControlParams& params) {
  validate(params);
  ControlParams out = params;
  out.basis.harmonics = 2 * params.basis.harmonics;
  out.basis.omega = 0.5 * params.basis.omega;
  const auto K = static_cast<std::size_t>(params.basis.harmonics);

  if (!params.zero_start) {
    const auto& old = params.shape.phi;
    std::vector<double> phi(4 * K - 1, kPi / 2.0);
    for (std::size_t i = 0; i < K; ++i) {
      phi[4 * i + 2] = old[2 * i];
      if (4 * i + 3 < phi.size()) phi[4 * i + 3] = old[2 * i + 1];
    }
    out.shape.phi = std::move(phi);
    return out;
  }

  // The solved first amplitude is not representable through the pinned
  // angle, so lift the solved amplitude vector and convert back to angles.
  std::vector<double> h = solve_shape(params).h;
  const double n = norm2(h);
  std::vector<double> wide(4 * K, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    wide[4 * i + 2] = h[2 * i] / n;
    wide[4 * i + 3] = h[2 * i + 1] / n;
  }
  out.shape.phi = angles_from_unit_vector(wide);
  out.shape.phi[0] = kPi / 2.0;
  return out;
}

}  // namespace pcd
