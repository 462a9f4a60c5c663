#pragma once

#include <stdexcept>
#include <string>

namespace bident {

// Bad input data, flags, or preconditions. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Classifier transport or protocol failure. Maps to CLI exit code 2.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bident
