#pragma once

#include <stdexcept>
#include <string>

namespace fgsa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (designs, configs, files).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidDesign : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems. `line()` is 1-based, 0 when unknown.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& what, int line = 0)
      : InvalidArgument(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Numerical failures: singular factorizations, zero variances.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateVariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllConditionedKernel : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace fgsa
