#include "homs/macro_solver.hpp"

#include <cmath>

#include "homs/error.hpp"

namespace homs {

namespace {

double sample(const SpaceTimeFunction& f, const Vec2& x, double t) { return f ? f(x, t) : 0.0; }

ScalarFunction at_time(const SpaceTimeFunction& f, double t) {
  if (!f) {
    return {};
  }
  return [f, t](const Vec2& x) { return f(x, t); };
}

ConstraintSet dirichlet_on(const Mesh& mesh, BoundaryTag sides, const SpaceTimeFunction& value, double t) {
  if (sides == BoundaryTag::none) {
    return ConstraintSet{};
  }
  auto nodes = boundary_nodes(mesh, sides);
  std::vector<double> values(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    values[i] = sample(value, mesh.nodes()[nodes[i]], t);
  }
  return ConstraintSet::dirichlet(std::move(nodes), std::move(values));
}

std::vector<NeumannData> flux_on(BoundaryTag sides, const SpaceTimeFunction& flux, double t) {
  if (sides == BoundaryTag::none || !flux) {
    return {};
  }
  return {NeumannData{sides, at_time(flux, t)}};
}

template <typename Solve>
auto tagged(int step, const char* subproblem, Solve solve) {
  try {
    return solve();
  } catch (const StepError&) {
    throw;
  } catch (const Error& e) {
    throw StepError(step, subproblem, e.what());
  }
}

}  // namespace

SpaceTimeFunction constant_in_space_time(double value) {
  return [value](const Vec2&, double) { return value; };
}

void TimeGrid::validate() const {
  if (steps < 1) {
    throw Error(ErrorCode::invalid_config, "time grid needs at least one step");
  }
  if (!(final_time > 0.0) || !std::isfinite(final_time)) {
    throw Error(ErrorCode::invalid_config, "final time must be positive");
  }
}

void ProblemData::validate() const {
  time.validate();
  if (potential_sides == BoundaryTag::none) {
    throw Error(ErrorCode::invalid_config, "the potential needs a Dirichlet side to be determined");
  }
}

ProblemData ProblemData::benchmark(TimeGrid time, double heat_source, double charge_source, double ambient) {
  ProblemData p;
  p.boundary_temperature = constant_in_space_time(ambient);
  p.boundary_potential = constant_in_space_time(0.0);
  p.heat_source = constant_in_space_time(heat_source);
  p.charge_source = constant_in_space_time(charge_source);
  p.initial_temperature = [ambient](const Vec2&) { return ambient; };
  p.time = time;
  return p;
}

ElementCoefficients NodalCoefficientModel::evaluate(const Mesh& mesh, const Vector& temperature) const {
  if (static_cast<std::size_t>(temperature.size()) != mesh.node_count()) {
    throw Error(ErrorCode::provenance, "temperature field does not match the mesh");
  }
  std::vector<HomogenizedCoefficients> nodal(mesh.node_count());
  for (std::size_t i = 0; i < nodal.size(); ++i) {
    nodal[i] = at_(temperature[static_cast<Eigen::Index>(i)]);
  }
  const std::size_t ne = mesh.element_count();
  ElementCoefficients c;
  c.heat_capacity.resize(static_cast<Eigen::Index>(ne));
  c.thermal.resize(ne);
  c.electric.resize(ne);
  c.joule.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& tri = mesh.elements()[e];
    const auto& a = nodal[tri[0]];
    const auto& b = nodal[tri[1]];
    const auto& d = nodal[tri[2]];
    c.heat_capacity[static_cast<Eigen::Index>(e)] = (a.S_hat + b.S_hat + d.S_hat) / 3.0;
    c.thermal[e] = (a.k_hat + b.k_hat + d.k_hat) / 3.0;
    c.electric[e] = (a.sigma_hat + b.sigma_hat + d.sigma_hat) / 3.0;
    c.joule[e] = (a.sigma_hat_star + b.sigma_hat_star + d.sigma_hat_star) / 3.0;
  }
  return c;
}

NodalCoefficientModel table_model(const OfflineTable& table) {
  table.validate();
  return NodalCoefficientModel([&table](double u) { return interpolate_homogenized(table, u); });
}

ElectricSolution solve_electric(const Mesh& mesh, const ElementCoefficients& coeffs, const ProblemData& problem,
                                double t, const SolverOptions& options) {
  const SparseMatrix A = assemble_stiffness(mesh, coeffs.electric);
  const Vector b = assemble_load(mesh, at_time(problem.charge_source, t),
                                 flux_on(problem.charge_flux_sides, problem.charge_flux, t));
  auto constraints = dirichlet_on(mesh, problem.potential_sides, problem.boundary_potential, t);
  std::vector<char> constrained(mesh.node_count(), 0);
  for (int i : constraints.dirichlet_nodes) {
    constrained[i] = 1;
  }
  const ConstrainedSolver solver(mesh, A, std::move(constraints), options);
  ElectricSolution out;
  out.phi = solver.solve(b);

  const Vector Aphi = A * out.phi;
  double energy = 0.0;
  double work = 0.0;
  for (Eigen::Index i = 0; i < out.phi.size(); ++i) {
    if (!constrained[i]) {
      energy += out.phi[i] * Aphi[i];
      work += out.phi[i] * b[i];
    }
  }
  out.energy_residual = energy == 0.0 ? std::abs(work) : std::abs(energy - work) / std::abs(energy);
  return out;
}

Vector joule_heating(const Mesh& mesh, const ElementCoefficients& coeffs, const Vector& phi) {
  const auto grads = element_gradients(mesh, phi);
  Vector q(static_cast<Eigen::Index>(grads.size()));
  for (std::size_t e = 0; e < grads.size(); ++e) {
    q[static_cast<Eigen::Index>(e)] = grads[e].dot(coeffs.joule[e] * grads[e]);
  }
  return q;
}

Vector solve_thermal(const Mesh& mesh, const ElementCoefficients& coeffs, const Vector& u, const Vector& phi,
                     const ProblemData& problem, const ThermalStep& step, const SolverOptions& options) {
  if (!(step.tau > 0.0) || step.theta <= 0.0 || step.theta > 1.0) {
    throw Error(ErrorCode::invalid_config, "thermal step needs tau > 0 and theta in (0, 1]");
  }
  const SparseMatrix K = assemble_stiffness(mesh, coeffs.thermal);
  const SparseMatrix M = assemble_mass(mesh, coeffs.heat_capacity);
  const SparseMatrix A = (M / step.tau + step.theta * K).pruned();
  Vector rhs = M * u / step.tau;
  if (step.theta < 1.0) {
    rhs -= (1.0 - step.theta) * (K * u);
  }
  rhs += load_elementwise(mesh, joule_heating(mesh, coeffs, phi));
  rhs += assemble_load(mesh, at_time(problem.heat_source, step.source_time),
                       flux_on(problem.heat_flux_sides, problem.heat_flux, step.flux_time));
  const ConstrainedSolver solver(
      mesh, A, dirichlet_on(mesh, problem.temperature_sides, problem.boundary_temperature, step.boundary_time),
      options);
  return solver.solve(rhs);
}

Vector extrapolate(const Vector& current, const Vector& previous) {
  if (current.size() != previous.size()) {
    throw Error(ErrorCode::provenance, "extrapolating fields of different sizes");
  }
  return 0.5 * (3.0 * current - previous);
}

ElectricSolution init_electric(const Mesh& mesh, const CoefficientModel& model, const Vector& u,
                               const ProblemData& problem, double t, const SolverOptions& options) {
  return solve_electric(mesh, model.evaluate(mesh, u), problem, t, options);
}

Vector half_step_thermal(const Mesh& mesh, const CoefficientModel& model, const Vector& u0, const Vector& phi0,
                         const ProblemData& problem, const SolverOptions& options) {
  const double t = problem.time.half(0);
  const ThermalStep step{0.5 * problem.time.dt(), 1.0, t, t, t};
  return solve_thermal(mesh, model.evaluate(mesh, u0), u0, phi0, problem, step, options);
}

StepResult advance_step(const Mesh& mesh, const CoefficientModel& model, const MacroTrajectory& state, int n,
                        const ProblemData& problem, const SolverOptions& options) {
  if (n < 0 || n >= static_cast<int>(state.u.size())) {
    throw Error(ErrorCode::dependency_order, "state does not hold u^" + std::to_string(n));
  }
  if (n == 0 && state.u_half_hat.size() == 0) {
    throw Error(ErrorCode::dependency_order, "the first step needs the predictor temperature");
  }
  const Vector u_hat = n == 0 ? state.u_half_hat : extrapolate(state.u[n], state.u[n - 1]);
  const auto coeffs = tagged(n, "coefficients", [&] { return model.evaluate(mesh, u_hat); });
  StepResult out;
  out.electric = tagged(n, "electric", [&] { return solve_electric(mesh, coeffs, problem, problem.time.half(n), options); });
  const ThermalStep step{problem.time.dt(), 0.5, problem.time.half(n), problem.time.at(n + 1),
                         problem.time.at(n + 1)};
  out.u_next = tagged(n, "thermal",
                      [&] { return solve_thermal(mesh, coeffs, state.u[n], out.electric.phi, problem, step, options); });
  return out;
}

Vector initial_field(const Mesh& mesh, const ProblemData& problem) {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  if (problem.initial_temperature) {
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      u[static_cast<Eigen::Index>(i)] = problem.initial_temperature(mesh.nodes()[i]);
    }
  }
  return u;
}

void run_trajectory(const Mesh& mesh, const CoefficientModel& model, const ProblemData& problem,
                    MacroTrajectory& out, const SolverOptions& options) {
  problem.validate();
  out = MacroTrajectory{};
  out.mesh_id = mesh.id();
  out.time = problem.time;
  out.u.push_back(initial_field(mesh, problem));

  auto phi0 = tagged(0, "electric-initial", [&] { return init_electric(mesh, model, out.u[0], problem, 0.0, options); });
  out.phi.push_back(std::move(phi0.phi));
  out.energy_residual.push_back(phi0.energy_residual);
  out.u_half_hat =
      tagged(0, "thermal-predictor", [&] { return half_step_thermal(mesh, model, out.u[0], out.phi[0], problem, options); });

  for (int n = 0; n < problem.time.steps; ++n) {
    auto step = advance_step(mesh, model, out, n, problem, options);
    if (!step.u_next.allFinite() || !step.electric.phi.allFinite()) {
      throw StepError(n, "thermal", "non-finite values");
    }
    out.phi.push_back(std::move(step.electric.phi));
    out.energy_residual.push_back(step.electric.energy_residual);
    out.u.push_back(std::move(step.u_next));
  }
}

MacroTrajectory run_trajectory(const Mesh& mesh, const CoefficientModel& model, const ProblemData& problem,
                               const SolverOptions& options) {
  MacroTrajectory out;
  run_trajectory(mesh, model, problem, out, options);
  return out;
}

}  // namespace homs
