#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfp {

// Shape and wiring mistakes: mismatched dimensions, wrong block counts.
class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// Value-level violations: invalid probabilities, broken preconditions,
// numerically unusable inputs.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// An iterate or flow left the configured bounding region.
class DivergenceError : public DomainError {
 public:
  explicit DivergenceError(const std::string& what) : DomainError(what) {}
};

// A solver ran out of iterations; carries the last iterate for diagnostics.
class NonConvergenceError : public DomainError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> last)
      : DomainError(what), last_iterate(std::move(last)) {}
  std::vector<double> last_iterate;
};

// Not enough recorded data to answer the query (short window, sparse knots).
class InsufficientDataError : public DomainError {
 public:
  explicit InsufficientDataError(const std::string& what) : DomainError(what) {}
};

// Bad configuration or unparsable input files; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sfp
