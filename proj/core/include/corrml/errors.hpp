#pragma once

#include <stdexcept>

namespace corrml {

// Bad inputs: missing files, parse failures, contract violations.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: divergent training, non-finite intermediates.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace corrml
