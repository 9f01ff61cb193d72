#pragma once

#include <stdexcept>
#include <string>

namespace fkcp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  GridMismatch() : Error("curves are not sampled on the same time grid") {}
};

class UnderdeterminedFit : public Error {
 public:
  using Error::Error;
};

class EmptyVariogram : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class SplitDegenerate : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class BaselineFailure : public Error {
 public:
  using Error::Error;
};

/// Input file problem; carries the 1-based row number (0 when not row specific).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Wraps a failure inside the conformal pipeline with the stage that raised it
/// (split, variogram, kriging, scoring).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace fkcp
