#pragma once

#include <stdexcept>
#include <string>

namespace hcv {

// Rejected inputs: parameter ranges, malformed configs, out-of-range queries.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// A computation could not produce a trustworthy result (singular system,
// integrator blow-up, inconsistent characteristic data).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hcv
