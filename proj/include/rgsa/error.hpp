#pragma once

#include <stdexcept>
#include <string>

namespace rgsa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: schema violations, unknown fields, bad option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A with-prior analysis was requested on a measure set that carries no prior.
class PriorRequiredError : public ConfigError {
 public:
  explicit PriorRequiredError(const std::string& what)
      : ConfigError("prior required: " + what) {}
};

/// Unreadable or malformed input data (sample files, sidecars).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite model output, quadrature non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Sensitivity indices are undefined because the output variance vanishes.
class ZeroVarianceError : public NumericError {
 public:
  explicit ZeroVarianceError(const std::string& what)
      : NumericError("zero output variance: " + what) {}
};

}  // namespace rgsa
