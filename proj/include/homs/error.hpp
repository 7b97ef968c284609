#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homs {

enum class ErrorCode {
  invalid_discretization,
  invalid_periodicity,
  unknown_marker,
  unknown_phase,
  non_elliptic_material,
  non_elliptic_assembly,
  non_convergence,
  singular_system,
  incompatible_rhs,
  dependency_order,
  provenance,
  invalid_tensor,
  invalid_table,
  stale_table,
  corrupt_table,
  interpolation,
  geometry_mismatch,
  undefined_relative_error,
  step_failure,
  picard_non_convergence,
  invalid_config,
  io,
};

[[nodiscard]] std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Iterative solve ran out of iterations; carries the final relative residual.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual, int iterations)
      : Error(ErrorCode::non_convergence, what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual),
        iterations_(iterations) {}

  [[nodiscard]] double residual() const noexcept { return residual_; }
  [[nodiscard]] int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A time step failed; tagged with the step index and the failing sub-problem.
class StepError : public Error {
 public:
  StepError(int step, std::string subproblem, const std::string& cause)
      : Error(ErrorCode::step_failure,
              "step " + std::to_string(step) + " [" + subproblem + "]: " + cause),
        step_(step),
        subproblem_(std::move(subproblem)) {}

  [[nodiscard]] int step() const noexcept { return step_; }
  [[nodiscard]] const std::string& subproblem() const noexcept { return subproblem_; }

 private:
  int step_;
  std::string subproblem_;
};

class PicardError : public Error {
 public:
  PicardError(int step, std::vector<double> history)
      : Error(ErrorCode::picard_non_convergence,
              "picard iteration did not converge at step " + std::to_string(step)),
        step_(step),
        history_(std::move(history)) {}

  [[nodiscard]] int step() const noexcept { return step_; }
  [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

 private:
  int step_;
  std::vector<double> history_;
};

}  // namespace homs
