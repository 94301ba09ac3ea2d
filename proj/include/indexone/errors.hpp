#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace indexone {

// Error categories shared by the C++ library and the C API.  The numeric
// values are part of the C ABI (see indexone.h) and must not be reordered.
enum class ErrorCode : int {
  ok = 0,
  invalid_argument = 1,
  dimension_mismatch = 2,
  evaluation = 3,
  singular_matrix = 4,
  rank_deficiency = 5,
  step_failure = 6,
  index_violation = 7,
  projection_failure = 8,
  config = 9,
  io = 10,
  internal = 11,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorCode::dimension_mismatch, what) {}
};

// A function evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::optional<std::size_t> component)
      : Error(ErrorCode::evaluation, what), component_(component) {}
  std::optional<std::size_t> component() const noexcept { return component_; }

 private:
  std::optional<std::size_t> component_;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : Error(ErrorCode::singular_matrix, what), pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

// Linearly dependent constraint fields (G M^-1 G^T singular).
class RankDeficiencyError : public Error {
 public:
  explicit RankDeficiencyError(const std::string& what) : Error(ErrorCode::rank_deficiency, what) {}
};

// Newton failed to converge on the stage equations.  The step index is filled
// in by the driver when the failure happens inside a multi-step run.
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, double residual, std::optional<long> step = std::nullopt)
      : Error(ErrorCode::step_failure, what), residual_(residual), step_(step) {}
  double residual() const noexcept { return residual_; }
  std::optional<long> step() const noexcept { return step_; }

 private:
  double residual_;
  std::optional<long> step_;
};

// dH_lambda/dlambda (or the full stage Jacobian) is singular.
class IndexViolation : public Error {
 public:
  explicit IndexViolation(const std::string& what, std::optional<long> step = std::nullopt)
      : Error(ErrorCode::index_violation, what), step_(step) {}
  std::optional<long> step() const noexcept { return step_; }

 private:
  std::optional<long> step_;
};

class ProjectionFailure : public Error {
 public:
  explicit ProjectionFailure(const std::string& what) : Error(ErrorCode::projection_failure, what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, std::optional<std::size_t> line = std::nullopt)
      : Error(ErrorCode::config, what), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::string field_;
  std::optional<std::size_t> line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

}  // namespace indexone
