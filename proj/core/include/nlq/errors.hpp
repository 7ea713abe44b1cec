#pragma once

#include <stdexcept>
#include <string>

namespace nlq {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, parameters derived from data).
// CLI maps this to exit code 3.
struct FormatError : Error {
  using Error::Error;
};

// Non-finite losses, gradients or other numerical breakdowns.
// CLI maps this to exit code 4.
struct NumericalError : Error {
  using Error::Error;
};

// Misuse of a command-line surface. CLI maps this to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace nlq
