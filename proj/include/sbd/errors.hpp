#pragma once

#include <stdexcept>
#include <string>

namespace sbd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric parameter passed to a generator or model function.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed file. field() names the offending header key or record.
class FormatError : public Error {
 public:
  FormatError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Inconsistent grid, camera, or pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Emitter placed outside the region of interest.
class PlacementError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Poisson likelihood evaluated at a nonpositive mean with a positive count.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(int iteration, const std::string& message);
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbd
