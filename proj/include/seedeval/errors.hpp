#pragma once

#include <stdexcept>
#include <string>

namespace seedeval {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (files, flags, configs).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computation that is undefined or degenerate for the given data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Observed seed set violates contrastive positivity under the design.
class PositivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace seedeval
