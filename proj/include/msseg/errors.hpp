#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msseg {

// Precondition on a numeric argument failed (n < 2, beta outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke an API contract (malformed partition, interval not inside its segment, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A signal produced a non-finite value while integrating one cell.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::size_t cell, const std::string& what)
      : std::runtime_error("cell " + std::to_string(cell) + ": " + what), cell_(cell) {}
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

// The constrained problem has no solution because a single-cell band is empty.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(std::size_t cell)
      : std::runtime_error("infeasible: single-cell band at cell " + std::to_string(cell) +
                           " is empty (threshold below minus the cell penalty)"),
        cell_(cell) {}
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

}  // namespace msseg
