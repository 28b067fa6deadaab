#pragma once

#include <stdexcept>
#include <string>

namespace nvelec {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid or unparseable configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Quadrature, sampling or optimizer failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Fewer than two peaks clear the prominence floor.
class PeaksUnresolved : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace nvelec
