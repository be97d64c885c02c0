#pragma once

#include <stdexcept>
#include <string>

namespace replab {

// An operation was called outside its domain (bad dimensions, a required
// hypothesis that does not hold, a vacuous bound). The CLI maps this to exit 4.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation produced a non-finite value or failed an internal self-check.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace replab
