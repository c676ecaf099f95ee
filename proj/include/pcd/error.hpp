#pragma once

#include <stdexcept>
#include <string>

namespace pcd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Amplitude vector is (numerically) zero, so the shape is undefined.
class DegenerateShape : public Error {
 public:
  DegenerateShape() : Error("degenerate shape") {}
};

/// No first-cosine amplitude in the search bracket yields u(0) = 0.
class InfeasibleZeroStart : public Error {
 public:
  InfeasibleZeroStart() : Error("infeasible zero-start shape") {}
};

class IntegrationDiverged : public Error {
 public:
  explicit IntegrationDiverged(const std::string& where)
      : Error("integration diverged: " + where) {}
};

class TrackingDiverged : public Error {
 public:
  explicit TrackingDiverged(const std::string& detail)
      : Error("tracking diverged: " + detail) {}
};

/// Invalid configuration value; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Malformed argument to a metric or utility (empty series, zero divisor...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcd
