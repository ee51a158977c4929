#pragma once

#include <stdexcept>
#include <string>

namespace fluxcube {

// Malformed or inconsistent input (files, labels, shapes, configuration).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, divergence, or optimizer failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fluxcube
