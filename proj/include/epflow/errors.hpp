#pragma once

#include <stdexcept>
#include <string>

namespace epflow {

/// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration and input problems. The CLI maps these to exit code 1.
struct ConfigError : Error {
  using Error::Error;
};

struct ParseError : ConfigError {
  ParseError(const std::string& msg, int line)
      : ConfigError("line " + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

struct ValidationError : ConfigError {
  using ConfigError::ConfigError;
};

struct InvalidParams : ConfigError {
  using ConfigError::ConfigError;
};

/// Numerical guards. The CLI maps these to exit code 2.
struct NumericalError : Error {
  using Error::Error;
};

struct SpectralSplitFailure : NumericalError {
  using NumericalError::NumericalError;
};

struct SingularBasis : NumericalError {
  using NumericalError::NumericalError;
};

struct AsymmetricSolution : NumericalError {
  using NumericalError::NumericalError;
};

struct NonConvexInput : NumericalError {
  using NumericalError::NumericalError;
};

struct InvalidConstants : NumericalError {
  using NumericalError::NumericalError;
};

struct DegenerateCritical : NumericalError {
  using NumericalError::NumericalError;
};

struct NoLocalMinima : NumericalError {
  using NumericalError::NumericalError;
};

struct GridTooCoarse : NumericalError {
  using NumericalError::NumericalError;
};

struct NoConvergence : NumericalError {
  using NumericalError::NumericalError;
};

struct SignFlip : NumericalError {
  using NumericalError::NumericalError;
};

struct Blowup : NumericalError {
  using NumericalError::NumericalError;
};

struct PositivityLoss : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace epflow
