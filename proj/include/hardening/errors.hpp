#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hardening {

/// Scenario or configuration rejected before any solve.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what,
                           std::vector<std::string> violations = {})
      : std::runtime_error(what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// A nonlinear solve (local or global) failed to converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hardening
