#include "homs/cell_solver.hpp"

#include <cmath>

#include "homs/error.hpp"

namespace homs {

namespace {

ConstraintSet cell_constraints(const Mesh& mesh, CellBoundaryMode mode) {
  if (mode == CellBoundaryMode::periodic) {
    return ConstraintSet::periodic(mesh);
  }
  return ConstraintSet::dirichlet(boundary_nodes(mesh, BoundaryTag::all), 0.0);
}

Vec2 unit(int a) { return a == 0 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0); }

Vector zero_field(const Mesh& mesh) { return Vector::Zero(static_cast<Eigen::Index>(mesh.node_count())); }

FieldFamily zero_family(const Mesh& mesh) {
  FieldFamily f;
  for (auto& row : f) {
    for (auto& v : row) {
      v = zero_field(mesh);
    }
  }
  return f;
}

template <class Self, class Ptr>
std::vector<std::pair<std::string, Ptr>> collect_fields(Self& s) {
  std::vector<std::pair<std::string, Ptr>> out;
  for (int a = 0; a < 2; ++a) {
    out.emplace_back("M" + std::to_string(a + 1), &s.M[a]);
  }
  for (int a = 0; a < 2; ++a) {
    out.emplace_back("N" + std::to_string(a + 1), &s.N[a]);
  }
  out.emplace_back("Q", &s.Q);
  auto family = [&](const char* name, auto& f) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        out.emplace_back(std::string(name) + std::to_string(a + 1) + std::to_string(b + 1), &f[a][b]);
      }
    }
  };
  family("M2_", s.M2);
  family("R2_", s.R2);
  family("H", s.H);
  family("G", s.G);
  family("N2_", s.N2);
  family("Z2_", s.Z2);
  family("W", s.W);
  return out;
}

}  // namespace

CellBoundaryMode parse_cell_boundary_mode(const std::string& text) {
  if (text == "dirichlet") {
    return CellBoundaryMode::dirichlet;
  }
  if (text == "periodic") {
    return CellBoundaryMode::periodic;
  }
  throw Error(ErrorCode::invalid_config, "unknown cell boundary mode '" + text + "'");
}

std::string_view to_string(CellBoundaryMode mode) {
  return mode == CellBoundaryMode::periodic ? "periodic" : "dirichlet";
}

std::vector<std::pair<std::string, const Vector*>> CellFunctionSet::fields() const {
  return collect_fields<const CellFunctionSet, const Vector*>(*this);
}

std::vector<std::pair<std::string, Vector*>> CellFunctionSet::fields() {
  return collect_fields<CellFunctionSet, Vector*>(*this);
}

std::vector<CoefficientSample> sample_elements(const Mesh& mesh, const MaterialLaw& law, double u0) {
  std::array<CoefficientSample, kPhaseCount> per_phase{};
  std::array<bool, kPhaseCount> used{};
  for (Phase p : mesh.element_phase()) {
    used[static_cast<std::size_t>(p)] = true;
  }
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    if (used[p]) {
      per_phase[p] = law.eval(static_cast<Phase>(p), u0);
    }
  }
  std::vector<CoefficientSample> out(mesh.element_count());
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = per_phase[static_cast<std::size_t>(mesh.element_phase()[e])];
  }
  return out;
}

CellOperators::CellOperators(const Mesh& mesh, const MaterialLaw& law, double u0, CellBoundaryMode mode,
                             const SolverOptions& options)
    : mesh_(&mesh), u0_(u0), mode_(mode), samples_(sample_elements(mesh, law, u0)) {
  const auto ne = static_cast<Eigen::Index>(mesh.element_count());
  k_.resize(ne);
  sigma_.resize(ne);
  for (Eigen::Index e = 0; e < ne; ++e) {
    k_[e] = samples_[static_cast<std::size_t>(e)].k;
    sigma_[e] = samples_[static_cast<std::size_t>(e)].sigma;
  }
  thermal_ = std::make_shared<ConstrainedSolver>(mesh, assemble_stiffness(mesh, k_), cell_constraints(mesh, mode),
                                                 options);
  electric_ = std::make_shared<ConstrainedSolver>(mesh, assemble_stiffness(mesh, sigma_),
                                                  cell_constraints(mesh, mode), options);
}

Vector CellOperators::solve_thermal(const Vector& rhs, double gross_scale) const {
  return thermal_->solve_scaled(rhs, gross_scale);
}

Vector CellOperators::solve_electric(const Vector& rhs, double gross_scale) const {
  return electric_->solve_scaled(rhs, gross_scale);
}

NodalField solve_cell_problem(const Mesh& mesh, const Vector& coeff, const Vector& rhs, CellBoundaryMode mode,
                              const SolverOptions& options) {
  const ConstrainedSolver solver(mesh, assemble_stiffness(mesh, coeff), cell_constraints(mesh, mode), options);
  return {solver.solve(rhs), mesh.id()};
}

FirstOrderFields solve_first_order(const CellOperators& ops) {
  const Mesh& mesh = ops.mesh();
  FirstOrderFields out;
  out.u0 = ops.u0();
  out.mesh_id = mesh.id();
  std::vector<Vec2> gk(mesh.element_count());
  std::vector<Vec2> gs(mesh.element_count());
  for (int a = 0; a < 2; ++a) {
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      gk[e] = -ops.k()[static_cast<Eigen::Index>(e)] * unit(a);
      gs[e] = -ops.sigma()[static_cast<Eigen::Index>(e)] * unit(a);
    }
    out.M[a] = ops.solve_thermal(load_divergence(mesh, gk), load_magnitude(mesh, Vector(), gk));
    out.N[a] = ops.solve_electric(load_divergence(mesh, gs), load_magnitude(mesh, Vector(), gs));
  }
  return out;
}

FirstOrderFields solve_first_order(const Mesh& mesh, const MaterialLaw& law, double u0, CellBoundaryMode mode,
                                   const SolverOptions& options) {
  const CellOperators ops(mesh, law, u0, mode, options);
  return solve_first_order(ops);
}

CellFunctionSet solve_second_order(const CellOperators& ops, const FirstOrderFields& first,
                                   const HomogenizedCoefficients& homog, const FirstOrderDerivatives& d1,
                                   const SecondOrderOptions& options) {
  const Mesh& mesh = ops.mesh();
  if (!homog.computed() || homog.u0 != ops.u0()) {
    throw Error(ErrorCode::dependency_order, "homogenized coefficients at u0 = " + std::to_string(ops.u0()) +
                                                 " must be computed before second-order cell problems");
  }
  if (first.mesh_id != mesh.id() || first.u0 != ops.u0()) {
    throw Error(ErrorCode::provenance, "first-order fields belong to another cell mesh or temperature");
  }
  const std::size_t ne = mesh.element_count();
  const auto& samples = ops.samples();

  CellFunctionSet out;
  out.u0 = ops.u0();
  out.mesh_id = mesh.id();
  out.M = first.M;
  out.N = first.N;

  std::array<std::vector<Vec2>, 2> gradM;
  std::array<std::vector<Vec2>, 2> gradN;
  std::array<Vector, 2> centroidM;
  for (int a = 0; a < 2; ++a) {
    gradM[a] = element_gradients(mesh, first.M[a]);
    gradN[a] = element_gradients(mesh, first.N[a]);
    centroidM[a] = element_average(mesh, first.M[a]);
  }

  Vector f(static_cast<Eigen::Index>(ne));
  std::vector<Vec2> g(ne);

  for (std::size_t e = 0; e < ne; ++e) {
    f[static_cast<Eigen::Index>(e)] = -(samples[e].heat_capacity() - homog.S_hat);
  }
  out.Q = ops.solve_thermal(load_elementwise(mesh, f), load_magnitude(mesh, f, {}) + homog.S_hat * mesh.total_area());

  // Strong form div(c grad X) = f + div(g) becomes int c grad X . grad v = -int f v + int g . grad v.
  // `cancelled` is the size of the terms that cancel inside `src`, so roundoff
  // residue of an exactly compatible source is not mistaken for incompatibility.
  auto solve_weak = [&](bool thermal, const Vector& src, const std::vector<Vec2>& flux, double cancelled) {
    const Vector rhs = load_elementwise(mesh, -src) + load_divergence(mesh, flux);
    const double gross = load_magnitude(mesh, src, flux) + cancelled * mesh.total_area();
    return thermal ? ops.solve_thermal(rhs, gross) : ops.solve_electric(rhs, gross);
  };

  out.R2 = zero_family(mesh);
  out.Z2 = zero_family(mesh);
  for (int a1 = 0; a1 < 2; ++a1) {
    for (int a2 = 0; a2 < 2; ++a2) {
      const double delta = a1 == a2 ? 1.0 : 0.0;

      for (std::size_t e = 0; e < ne; ++e) {
        const auto& s = samples[e];
        const auto ei = static_cast<Eigen::Index>(e);
        f[ei] = homog.k_hat(a1, a2) - s.k * delta - s.k * gradM[a2][e][a1];
        g[e] = -s.k * centroidM[a2][ei] * unit(a1);
      }
      out.M2[a1][a2] = solve_weak(true, f, g, homog.k_hat.norm());

      const Vector centroidN = element_average(mesh, first.N[a2]);
      for (std::size_t e = 0; e < ne; ++e) {
        const auto& s = samples[e];
        const auto ei = static_cast<Eigen::Index>(e);
        f[ei] = homog.sigma_hat(a1, a2) - s.sigma * delta - s.sigma * gradN[a2][e][a1];
        g[e] = -s.sigma * centroidN[ei] * unit(a1);
      }
      out.N2[a1][a2] = solve_weak(false, f, g, homog.sigma_hat.norm());

      for (std::size_t e = 0; e < ne; ++e) {
        const auto& s = samples[e];
        const auto ei = static_cast<Eigen::Index>(e);
        f[ei] = 0.0;
        g[e] = -centroidM[a1][ei] * s.d1_k * (unit(a2) + gradM[a2][e]);
      }
      out.H[a1][a2] = solve_weak(true, f, g, 0.0);

      for (std::size_t e = 0; e < ne; ++e) {
        const auto& s = samples[e];
        const auto ei = static_cast<Eigen::Index>(e);
        f[ei] = homog.sigma_hat_star(a1, a2) - s.sigma * delta - s.sigma * gradN[a1][e][a2] -
                s.sigma * gradN[a2][e][a1] - s.sigma * gradN[a1][e].dot(gradN[a2][e]);
        g[e] = Vec2::Zero();
      }
      out.G[a1][a2] = solve_weak(true, f, g, homog.sigma_hat_star.norm());

      for (std::size_t e = 0; e < ne; ++e) {
        const auto& s = samples[e];
        const auto ei = static_cast<Eigen::Index>(e);
        f[ei] = 0.0;
        g[e] = -centroidM[a1][ei] * s.d1_sigma * (unit(a2) + gradN[a2][e]);
      }
      out.W[a1][a2] = solve_weak(false, f, g, 0.0);
    }
  }

  if (options.chain_rule_terms) {
    for (int a1 = 0; a1 < 2; ++a1) {
      const auto grad_dM = element_gradients(mesh, d1.dM[a1]);
      const auto grad_dN = element_gradients(mesh, d1.dN[a1]);
      const Vector centroid_dM = element_average(mesh, d1.dM[a1]);
      const Vector centroid_dN = element_average(mesh, d1.dN[a1]);
      for (int a2 = 0; a2 < 2; ++a2) {
        const double delta = a1 == a2 ? 1.0 : 0.0;
        // q is the temperature derivative of the effective-flux integrand; its
        // cell mean is the derivative of the effective conductivity entry.
        Vector q(static_cast<Eigen::Index>(ne));
        for (std::size_t e = 0; e < ne; ++e) {
          const auto& s = samples[e];
          q[static_cast<Eigen::Index>(e)] =
              s.d1_k * delta + s.d1_k * gradM[a1][e][a2] + s.k * grad_dM[e][a2];
          g[e] = -s.k * centroid_dM[static_cast<Eigen::Index>(e)] * unit(a2);
        }
        double mean_q = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
          mean_q += mesh.geometry()[e].area * q[static_cast<Eigen::Index>(e)];
        }
        mean_q /= mesh.total_area();
        out.R2[a1][a2] = solve_weak(true, Vector((mean_q - q.array()).matrix()), g,
                                    load_magnitude(mesh, q, {}) / mesh.total_area());

        for (std::size_t e = 0; e < ne; ++e) {
          const auto& s = samples[e];
          q[static_cast<Eigen::Index>(e)] =
              s.d1_sigma * delta + s.d1_sigma * gradN[a1][e][a2] + s.sigma * grad_dN[e][a2];
          g[e] = -s.sigma * centroid_dN[static_cast<Eigen::Index>(e)] * unit(a2);
        }
        mean_q = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
          mean_q += mesh.geometry()[e].area * q[static_cast<Eigen::Index>(e)];
        }
        mean_q /= mesh.total_area();
        out.Z2[a1][a2] = solve_weak(false, Vector((mean_q - q.array()).matrix()), g,
                                    load_magnitude(mesh, q, {}) / mesh.total_area());
      }
    }
  }
  return out;
}

}  // namespace homs
