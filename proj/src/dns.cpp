#include "homs/dns.hpp"

#include <cmath>

#include "homs/error.hpp"

namespace homs {

Linearization parse_linearization(const std::string& text) {
  if (text == "extrapolated") {
    return Linearization::extrapolated;
  }
  if (text == "picard") {
    return Linearization::picard;
  }
  throw Error(ErrorCode::invalid_config, "unknown linearization '" + text + "'");
}

std::string_view to_string(Linearization mode) {
  return mode == Linearization::picard ? "picard" : "extrapolated";
}

ElementCoefficients PhaseCoefficientModel::evaluate(const Mesh& mesh, const Vector& temperature) const {
  if (static_cast<std::size_t>(temperature.size()) != mesh.node_count()) {
    throw Error(ErrorCode::provenance, "temperature field does not match the mesh");
  }
  const std::size_t ne = mesh.element_count();
  ElementCoefficients c;
  c.heat_capacity.resize(static_cast<Eigen::Index>(ne));
  c.thermal.resize(ne);
  c.electric.resize(ne);
  c.joule.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const Phase phase = mesh.element_phase()[e];
    double S = 0.0, k = 0.0, sigma = 0.0;
    for (const int node : mesh.elements()[e]) {
      const auto s = law_.eval(phase, temperature[node]);
      S += s.heat_capacity();
      k += s.k;
      sigma += s.sigma;
    }
    c.heat_capacity[static_cast<Eigen::Index>(e)] = S / 3.0;
    c.thermal[e] = (k / 3.0) * Mat2::Identity();
    c.electric[e] = (sigma / 3.0) * Mat2::Identity();
    c.joule[e] = c.electric[e];
  }
  return c;
}

Mesh build_dns_mesh(const DnsConfig& config) {
  if (!(config.epsilon > 0.0) || config.elements_per_cell < 1) {
    throw Error(ErrorCode::invalid_config, "DNS needs epsilon > 0 and at least one element per cell");
  }
  if (std::abs(config.domain.width() - config.domain.height()) > 1e-12 * config.domain.width()) {
    throw Error(ErrorCode::invalid_config, "DNS domain must be square");
  }
  const int cells = cells_per_side(config.domain.width(), config.epsilon);
  return assign_phases(build_structured_mesh(config.domain, cells * config.elements_per_cell), config.geometry,
                       config.epsilon);
}

namespace {

template <typename Solve>
auto tagged(int step, const char* subproblem, Solve solve) {
  try {
    return solve();
  } catch (const StepError&) {
    throw;
  } catch (const PicardError&) {
    throw;
  } catch (const Error& e) {
    throw StepError(step, subproblem, e.what());
  }
}

void run_picard(const Mesh& mesh, const PhaseCoefficientModel& model, const DnsConfig& config, DnsResult& out) {
  const ProblemData& problem = config.problem;
  const SolverOptions& options = config.solver;
  auto& traj = out.trajectory;
  const TimeGrid& time = problem.time;
  for (int n = 0; n < time.steps; ++n) {
    const Vector u_hat = n == 0 ? traj.u_half_hat : extrapolate(traj.u[n], traj.u[n - 1]);
    Vector guess = 2.0 * u_hat - traj.u[n];
    std::vector<double> history;
    ElectricSolution electric;
    bool converged = false;
    for (int k = 0; k < config.picard_max_iter && !converged; ++k) {
      const Vector mid = 0.5 * (traj.u[n] + guess);
      const auto coeffs = tagged(n, "coefficients", [&] { return model.evaluate(mesh, mid); });
      electric = tagged(n, "electric", [&] { return solve_electric(mesh, coeffs, problem, time.half(n), options); });
      const ThermalStep step{time.dt(), 0.5, time.half(n), time.at(n + 1), time.at(n + 1)};
      Vector next = tagged(n, "thermal", [&] {
        return solve_thermal(mesh, coeffs, traj.u[n], electric.phi, problem, step, options);
      });
      const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
      history.push_back((next - guess).cwiseAbs().maxCoeff() / scale);
      converged = history.back() <= config.picard_tol;
      guess = std::move(next);
    }
    if (!converged) {
      throw PicardError(n, history);
    }
    out.picard_iterations.push_back(static_cast<int>(history.size()));
    traj.phi.push_back(std::move(electric.phi));
    traj.energy_residual.push_back(electric.energy_residual);
    traj.u.push_back(std::move(guess));
  }
}

}  // namespace

DnsResult solve_dns(const DnsConfig& config) {
  config.problem.validate();
  DnsResult out{build_dns_mesh(config), {}, {}};
  const PhaseCoefficientModel model(config.law);
  if (config.linearization == Linearization::extrapolated) {
    run_trajectory(out.mesh, model, config.problem, out.trajectory, config.solver);
    return out;
  }
  if (config.picard_max_iter < 1 || !(config.picard_tol > 0.0)) {
    throw Error(ErrorCode::invalid_config, "picard needs max_iter >= 1 and tol > 0");
  }
  auto& traj = out.trajectory;
  traj.mesh_id = out.mesh.id();
  traj.time = config.problem.time;
  traj.u.push_back(initial_field(out.mesh, config.problem));
  auto phi0 = tagged(0, "electric-initial",
                     [&] { return init_electric(out.mesh, model, traj.u[0], config.problem, 0.0, config.solver); });
  traj.phi.push_back(std::move(phi0.phi));
  traj.energy_residual.push_back(phi0.energy_residual);
  traj.u_half_hat = tagged(0, "thermal-predictor", [&] {
    return half_step_thermal(out.mesh, model, traj.u[0], traj.phi[0], config.problem, config.solver);
  });
  run_picard(out.mesh, model, config, out);
  return out;
}

}  // namespace homs
