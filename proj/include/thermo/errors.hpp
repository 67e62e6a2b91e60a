#pragma once

#include <stdexcept>
#include <string>

namespace thermo {

/// Argument outside the map domain, or a precondition on an input value.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A preimage walk would exceed the configured node budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, int feasible_depth)
      : std::runtime_error(what), feasible_depth_(feasible_depth) {}

  /// Deepest level that fits in the budget (0 if even depth 1 does not).
  int feasible_depth() const noexcept { return feasible_depth_; }

 private:
  int feasible_depth_;
};

/// Truncation or iteration did not reach the requested accuracy.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical audit that must hold failed.
class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace thermo
