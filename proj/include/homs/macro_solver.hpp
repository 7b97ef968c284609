#pragma once

#include <functional>
#include <string>
#include <vector>

#include "homs/coefficients.hpp"
#include "homs/fem.hpp"
#include "homs/mesh.hpp"
#include "homs/offline_store.hpp"
#include "homs/problem.hpp"

namespace homs {

/// Coefficients of the coupled system frozen on each element.
struct ElementCoefficients {
  Vector heat_capacity;
  std::vector<Mat2> thermal;
  std::vector<Mat2> electric;
  std::vector<Mat2> joule;
};

/// Maps a nodal temperature field to element coefficients.
class CoefficientModel {
 public:
  virtual ~CoefficientModel() = default;
  [[nodiscard]] virtual ElementCoefficients evaluate(const Mesh& mesh, const Vector& temperature) const = 0;
};

/// Effective coefficients given as a function of temperature, evaluated at
/// every node and averaged over each element.
class NodalCoefficientModel final : public CoefficientModel {
 public:
  explicit NodalCoefficientModel(std::function<HomogenizedCoefficients(double)> at) : at_(std::move(at)) {}

  [[nodiscard]] ElementCoefficients evaluate(const Mesh& mesh, const Vector& temperature) const override;

 private:
  std::function<HomogenizedCoefficients(double)> at_;
};

/// Interpolates the table; the table must outlive the model.
[[nodiscard]] NodalCoefficientModel table_model(const OfflineTable& table);

struct ElectricSolution {
  Vector phi;
  /// |phi.A.phi - b.phi| / |phi.A.phi| over the unconstrained nodes.
  double energy_residual = 0.0;
};

/// Steady potential at frozen coefficients with data taken at time t.
[[nodiscard]] ElectricSolution solve_electric(const Mesh& mesh, const ElementCoefficients& coeffs,
                                              const ProblemData& problem, double t,
                                              const SolverOptions& options = {});

/// One linear thermal step
///   (S/tau) M (u+ - u) + K (theta u+ + (1 - theta) u) = Joule(phi) + f_u + q
/// with sources, fluxes and Dirichlet values sampled at their own times.
struct ThermalStep {
  double tau = 0.0;
  double theta = 0.5;
  double source_time = 0.0;
  double flux_time = 0.0;
  double boundary_time = 0.0;
};

[[nodiscard]] Vector solve_thermal(const Mesh& mesh, const ElementCoefficients& coeffs, const Vector& u,
                                   const Vector& phi, const ProblemData& problem, const ThermalStep& step,
                                   const SolverOptions& options = {});

/// Joule heating per element from the element-constant potential gradient.
[[nodiscard]] Vector joule_heating(const Mesh& mesh, const ElementCoefficients& coeffs, const Vector& phi);

/// (3 u^n - u^{n-1}) / 2
[[nodiscard]] Vector extrapolate(const Vector& current, const Vector& previous);

struct MacroTrajectory {
  MeshId mesh_id;
  TimeGrid time;
  /// u[n] at t_n, n = 0..N.
  std::vector<Vector> u;
  /// phi[0] at t_0, then phi[n] at t_{n-1/2} for n = 1..N.
  std::vector<Vector> phi;
  /// Predictor temperature at t_{1/2}.
  Vector u_half_hat;
  /// One entry per electric solve, aligned with phi.
  std::vector<double> energy_residual;

  [[nodiscard]] int completed_steps() const { return static_cast<int>(u.size()) - 1; }
};

[[nodiscard]] ElectricSolution init_electric(const Mesh& mesh, const CoefficientModel& model, const Vector& u,
                                             const ProblemData& problem, double t, const SolverOptions& options = {});

/// Implicit half step with every coefficient frozen at u0.
[[nodiscard]] Vector half_step_thermal(const Mesh& mesh, const CoefficientModel& model, const Vector& u0,
                                       const Vector& phi0, const ProblemData& problem,
                                       const SolverOptions& options = {});

struct StepResult {
  ElectricSolution electric;
  Vector u_next;
};

/// Electric solve at t_{n+1/2} and Crank-Nicolson thermal solve for u^{n+1}.
/// Requires state.u[0..n] and, for n = 0, state.u_half_hat.
[[nodiscard]] StepResult advance_step(const Mesh& mesh, const CoefficientModel& model, const MacroTrajectory& state,
                                      int n, const ProblemData& problem, const SolverOptions& options = {});

/// Initial temperature sampled at every node.
[[nodiscard]] Vector initial_field(const Mesh& mesh, const ProblemData& problem);

/// Fills `out` step by step; on failure `out` keeps the completed steps and a
/// StepError names the step and sub-problem.
void run_trajectory(const Mesh& mesh, const CoefficientModel& model, const ProblemData& problem,
                    MacroTrajectory& out, const SolverOptions& options = {});

[[nodiscard]] MacroTrajectory run_trajectory(const Mesh& mesh, const CoefficientModel& model,
                                             const ProblemData& problem, const SolverOptions& options = {});

}  // namespace homs
