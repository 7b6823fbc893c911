#pragma once

#include <stdexcept>
#include <string>

namespace stg {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor, mask or parameter shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Inputs are structurally unusable (empty lists, empty masks, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; message names file, line and field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Binary container or checkpoint does not match the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Sampling or learning produced non-finite values.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace stg
