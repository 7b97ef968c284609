#include "homs/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <utility>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "homs/error.hpp"

namespace homs {

namespace {

using Triplet = Eigen::Triplet<double>;
using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

void check_coefficients(const Mesh& mesh, const Vector& coeff, const char* what) {
  if (static_cast<std::size_t>(coeff.size()) != mesh.element_count()) {
    throw Error(ErrorCode::provenance, std::string(what) + ": one value per element expected");
  }
  for (Eigen::Index e = 0; e < coeff.size(); ++e) {
    if (!(coeff[e] > 0.0) || !std::isfinite(coeff[e])) {
      throw Error(ErrorCode::non_elliptic_assembly,
                  std::string(what) + " coefficient " + std::to_string(coeff[e]) + " on element " +
                      std::to_string(e));
    }
  }
}

void check_nodal(const Mesh& mesh, const Vector& field) {
  if (static_cast<std::size_t>(field.size()) != mesh.node_count()) {
    throw Error(ErrorCode::provenance, "field length " + std::to_string(field.size()) +
                                           " does not match node count " + std::to_string(mesh.node_count()));
  }
}

SparseMatrix from_triplets(std::size_t n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

struct BoundaryEdge {
  int a;
  int b;
};

std::vector<BoundaryEdge> boundary_edges(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  std::map<std::pair<int, int>, BoundaryEdge> oriented;
  for (const auto& tri : mesh.elements()) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      const auto key = std::minmax(a, b);
      ++count[key];
      oriented[key] = {a, b};
    }
  }
  std::vector<BoundaryEdge> out;
  for (const auto& [key, c] : count) {
    if (c == 1) {
      out.push_back(oriented[key]);
    }
  }
  return out;
}

}  // namespace

SparseMatrix assemble_stiffness(const Mesh& mesh, const Vector& coeff) {
  check_coefficients(mesh, coeff, "stiffness");
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.element_count() * 9);
  const auto& elements = mesh.elements();
  const auto& geometry = mesh.geometry();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& g = geometry[e];
    const double w = coeff[static_cast<Eigen::Index>(e)] * g.area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        triplets.emplace_back(elements[e][i], elements[e][j], w * g.grad[i].dot(g.grad[j]));
      }
    }
  }
  return from_triplets(mesh.node_count(), triplets);
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const std::vector<Mat2>& coeff) {
  if (coeff.size() != mesh.element_count()) {
    throw Error(ErrorCode::provenance, "stiffness tensors do not match the mesh");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.element_count() * 9);
  const auto& elements = mesh.elements();
  const auto& geometry = mesh.geometry();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const Mat2& c = coeff[e];
    const Mat2 sym = 0.5 * (c + c.transpose());
    if (!c.allFinite() || !(sym(0, 0) > 0.0) || !(sym.determinant() > 0.0)) {
      throw Error(ErrorCode::non_elliptic_assembly, "stiffness tensor is not positive definite on element " +
                                                        std::to_string(e));
    }
    const auto& g = geometry[e];
    for (int i = 0; i < 3; ++i) {
      const Vec2 flux = g.area * (c.transpose() * g.grad[i]);
      for (int j = 0; j < 3; ++j) {
        triplets.emplace_back(elements[e][i], elements[e][j], flux.dot(g.grad[j]));
      }
    }
  }
  return from_triplets(mesh.node_count(), triplets);
}

SparseMatrix assemble_mass(const Mesh& mesh, const Vector& weight) {
  check_coefficients(mesh, weight, "mass");
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.element_count() * 9);
  const auto& elements = mesh.elements();
  const auto& geometry = mesh.geometry();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const double w = weight[static_cast<Eigen::Index>(e)] * geometry[e].area / 12.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        triplets.emplace_back(elements[e][i], elements[e][j], i == j ? 2.0 * w : w);
      }
    }
  }
  return from_triplets(mesh.node_count(), triplets);
}

Vector assemble_load(const Mesh& mesh, const ScalarFunction& source, const std::vector<NeumannData>& neumann) {
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  const auto& nodes = mesh.nodes();
  if (source) {
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      const auto& tri = mesh.elements()[e];
      const double area = mesh.geometry()[e].area;
      // Edge midpoints integrate quadratics exactly; each basis is 1/2 at two of them.
      std::array<double, 3> f_mid{};
      for (int k = 0; k < 3; ++k) {
        f_mid[k] = source(0.5 * (nodes[tri[k]] + nodes[tri[(k + 1) % 3]]));
      }
      for (int i = 0; i < 3; ++i) {
        const double touching = f_mid[i] + f_mid[(i + 2) % 3];
        b[tri[i]] += area / 3.0 * 0.5 * touching;
      }
    }
  }
  if (!neumann.empty()) {
    const auto edges = boundary_edges(mesh);
    for (const auto& data : neumann) {
      (void)boundary_nodes(mesh, data.tag);
      if (!data.flux) {
        continue;
      }
      for (const auto& edge : edges) {
        const auto shared = static_cast<BoundaryTag>(static_cast<std::uint8_t>(mesh.boundary_marker(edge.a)) &
                                                     static_cast<std::uint8_t>(mesh.boundary_marker(edge.b)));
        if (!intersects(shared, data.tag)) {
          continue;
        }
        const Vec2& pa = nodes[edge.a];
        const Vec2& pb = nodes[edge.b];
        const double len = (pb - pa).norm();
        const double ga = data.flux(pa);
        const double gm = data.flux(0.5 * (pa + pb));
        const double gb = data.flux(pb);
        b[edge.a] += len / 6.0 * (ga + 2.0 * gm);
        b[edge.b] += len / 6.0 * (gb + 2.0 * gm);
      }
    }
  }
  return b;
}

Vector load_elementwise(const Mesh& mesh, const Vector& per_element) {
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double share = per_element[static_cast<Eigen::Index>(e)] * mesh.geometry()[e].area / 3.0;
    for (int node : mesh.elements()[e]) {
      b[node] += share;
    }
  }
  return b;
}

Vector load_divergence(const Mesh& mesh, const std::vector<Vec2>& per_element) {
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& g = mesh.geometry()[e];
    for (int i = 0; i < 3; ++i) {
      b[mesh.elements()[e][i]] += g.area * per_element[e].dot(g.grad[i]);
    }
  }
  return b;
}

std::vector<Vec2> element_gradients(const Mesh& mesh, const Vector& field) {
  check_nodal(mesh, field);
  std::vector<Vec2> out(mesh.element_count());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& tri = mesh.elements()[e];
    const auto& g = mesh.geometry()[e];
    out[e] = field[tri[0]] * g.grad[0] + field[tri[1]] * g.grad[1] + field[tri[2]] * g.grad[2];
  }
  return out;
}

GradientField recover_gradient(const Mesh& mesh, const Vector& field) {
  const auto grads = element_gradients(mesh, field);
  GradientField sum(mesh.node_count(), Vec2::Zero());
  std::vector<double> weight(mesh.node_count(), 0.0);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double area = mesh.geometry()[e].area;
    for (int node : mesh.elements()[e]) {
      sum[node] += area * grads[e];
      weight[node] += area;
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (weight[i] > 0.0) {
      sum[i] /= weight[i];
    }
  }
  return sum;
}

Vector component(const GradientField& g, int c) {
  Vector out(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = g[i][c];
  }
  return out;
}

Vector element_average(const Mesh& mesh, const Vector& nodal) {
  check_nodal(mesh, nodal);
  Vector out(static_cast<Eigen::Index>(mesh.element_count()));
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& tri = mesh.elements()[e];
    out[static_cast<Eigen::Index>(e)] = (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
  }
  return out;
}

double integrate(const Mesh& mesh, const Vector& field) {
  check_nodal(mesh, field);
  double acc = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& tri = mesh.elements()[e];
    acc += mesh.geometry()[e].area / 3.0 * (field[tri[0]] + field[tri[1]] + field[tri[2]]);
  }
  return acc;
}

double mean_value(const Mesh& mesh, const Vector& field) {
  return integrate(mesh, field) / mesh.total_area();
}

double l2_norm(const Mesh& mesh, const Vector& field) {
  check_nodal(mesh, field);
  double acc = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& tri = mesh.elements()[e];
    const double a = field[tri[0]];
    const double b = field[tri[1]];
    const double c = field[tri[2]];
    // Exact P1 mass form: area/6 * (a^2+b^2+c^2+ab+bc+ca).
    acc += mesh.geometry()[e].area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
  }
  return std::sqrt(std::max(acc, 0.0));
}

double h1_seminorm(const Mesh& mesh, const Vector& field) {
  const auto grads = element_gradients(mesh, field);
  double acc = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    acc += mesh.geometry()[e].area * grads[e].squaredNorm();
  }
  return std::sqrt(acc);
}

std::vector<int> periodic_masters(const Mesh& mesh) {
  const auto& s = mesh.structured();
  if (!s) {
    throw Error(ErrorCode::invalid_periodicity, "periodic identification requires a structured mesh");
  }
  const int nx = s->nx;
  const int ny = s->ny;
  std::vector<int> masters(mesh.node_count());
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      masters[static_cast<std::size_t>(i + j * (nx + 1))] = (i % nx) + (j % ny) * (nx + 1);
    }
  }
  return masters;
}

ConstraintSet ConstraintSet::dirichlet(std::vector<int> nodes, std::vector<double> values) {
  if (nodes.size() != values.size()) {
    throw Error(ErrorCode::invalid_config, "Dirichlet node and value counts differ");
  }
  ConstraintSet c;
  c.kind = Kind::dirichlet;
  c.dirichlet_nodes = std::move(nodes);
  c.dirichlet_values = std::move(values);
  return c;
}

ConstraintSet ConstraintSet::dirichlet(std::vector<int> nodes, double value) {
  std::vector<double> values(nodes.size(), value);
  return dirichlet(std::move(nodes), std::move(values));
}

ConstraintSet ConstraintSet::periodic(const Mesh& mesh) {
  ConstraintSet c;
  c.kind = Kind::periodic;
  c.masters = periodic_masters(mesh);
  return c;
}

SolverOptions::Method parse_solver_method(const std::string& text) {
  if (text == "auto" || text == "automatic") {
    return SolverOptions::Method::automatic;
  }
  if (text == "cg") {
    return SolverOptions::Method::cg;
  }
  if (text == "direct") {
    return SolverOptions::Method::direct;
  }
  throw Error(ErrorCode::invalid_config, "unknown solver method '" + text + "'");
}

void apply_dirichlet(SparseSystem& system) {
  const auto& c = system.constraints;
  if (c.kind != ConstraintSet::Kind::dirichlet) {
    return;
  }
  const Eigen::Index n = system.matrix.rows();
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  Vector known = Vector::Zero(n);
  for (std::size_t k = 0; k < c.dirichlet_nodes.size(); ++k) {
    fixed[static_cast<std::size_t>(c.dirichlet_nodes[k])] = 1;
    known[c.dirichlet_nodes[k]] = c.dirichlet_values[k];
  }
  system.rhs -= system.matrix * known;
  std::vector<Triplet> triplets;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(system.matrix, r); it; ++it) {
      if (!fixed[static_cast<std::size_t>(it.row())] && !fixed[static_cast<std::size_t>(it.col())]) {
        triplets.emplace_back(it.row(), it.col(), it.value());
      }
    }
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    if (fixed[static_cast<std::size_t>(r)]) {
      triplets.emplace_back(r, r, 1.0);
      system.rhs[r] = known[r];
    }
  }
  system.matrix = from_triplets(static_cast<std::size_t>(n), triplets);
}

bool rhs_compatible(const Vector& rhs, double tol, double gross_scale) {
  const double total = rhs.sum();
  const double scale = std::max(rhs.cwiseAbs().sum(), gross_scale);
  return std::abs(total) <= tol * scale;
}

double load_magnitude(const Mesh& mesh, const Vector& per_element, const std::vector<Vec2>& flux) {
  double acc = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& g = mesh.geometry()[e];
    if (per_element.size() > 0) {
      acc += g.area * std::abs(per_element[static_cast<Eigen::Index>(e)]);
    }
    if (!flux.empty()) {
      acc += g.area * flux[e].norm() * (g.grad[0].norm() + g.grad[1].norm() + g.grad[2].norm());
    }
  }
  return acc;
}

struct ConstrainedSolver::Impl {
  const Mesh* mesh = nullptr;
  SparseMatrix full;
  ConstraintSet constraints;
  SolverOptions options;
  // Full node -> reduced unknown, or -1 when the value is prescribed.
  std::vector<int> reduced_index;
  int reduced_count = 0;
  ColMatrix reduced;
  bool use_direct = true;
  Eigen::SimplicialLDLT<ColMatrix> ldlt;
  Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;

  Vector solve(const Vector& rhs, const std::vector<double>& dirichlet_values, double gross_scale) const;

  Vector prescribed(const std::vector<double>& values) const {
    Vector x = Vector::Zero(full.rows());
    for (std::size_t k = 0; k < constraints.dirichlet_nodes.size(); ++k) {
      x[constraints.dirichlet_nodes[k]] = values[k];
    }
    return x;
  }
};

ConstrainedSolver::ConstrainedSolver(const Mesh& mesh, const SparseMatrix& matrix, ConstraintSet constraints,
                                     SolverOptions options)
    : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  s.mesh = &mesh;
  s.full = matrix;
  s.constraints = std::move(constraints);
  s.options = options;
  const auto n = static_cast<std::size_t>(matrix.rows());
  if (n != mesh.node_count()) {
    throw Error(ErrorCode::provenance, "operator size does not match mesh");
  }

  s.reduced_index.assign(n, 0);
  switch (s.constraints.kind) {
    case ConstraintSet::Kind::none: {
      std::iota(s.reduced_index.begin(), s.reduced_index.end(), 0);
      s.reduced_count = static_cast<int>(n);
      break;
    }
    case ConstraintSet::Kind::dirichlet: {
      for (int node : s.constraints.dirichlet_nodes) {
        if (node < 0 || static_cast<std::size_t>(node) >= n) {
          throw Error(ErrorCode::invalid_config, "Dirichlet node out of range");
        }
        s.reduced_index[static_cast<std::size_t>(node)] = -1;
      }
      int next = 0;
      for (auto& r : s.reduced_index) {
        if (r == 0) {
          r = next++;
        }
      }
      s.reduced_count = next;
      break;
    }
    case ConstraintSet::Kind::periodic: {
      if (s.constraints.masters.size() != n) {
        throw Error(ErrorCode::invalid_periodicity, "periodic map does not match mesh");
      }
      // Masters are numbered in order; the first master is pinned to zero.
      std::vector<int> master_slot(n, -2);
      int next = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto m = static_cast<std::size_t>(s.constraints.masters[i]);
        if (master_slot[m] == -2) {
          master_slot[m] = next == 0 ? -1 : next - 1;
          ++next;
        }
        s.reduced_index[i] = master_slot[m];
      }
      s.reduced_count = next - 1;
      break;
    }
  }

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(matrix.nonZeros()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    const int rr = s.reduced_index[static_cast<std::size_t>(r)];
    if (rr < 0) {
      continue;
    }
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      const int rc = s.reduced_index[static_cast<std::size_t>(it.col())];
      if (rc >= 0) {
        triplets.emplace_back(rr, rc, it.value());
      }
    }
  }
  s.reduced.resize(s.reduced_count, s.reduced_count);
  s.reduced.setFromTriplets(triplets.begin(), triplets.end());
  s.reduced.makeCompressed();

  s.use_direct = options.method == SolverOptions::Method::direct ||
                 (options.method == SolverOptions::Method::automatic && s.reduced_count <= options.direct_limit);
  if (s.reduced_count == 0) {
    return;
  }
  if (s.use_direct) {
    s.ldlt.compute(s.reduced);
    if (s.ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_system, "factorization failed");
    }
    const Vector d = s.ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.cwiseAbs().minCoeff();
    if (!(dmin > 1e-13 * dmax) || d.minCoeff() <= 0.0) {
      throw Error(ErrorCode::singular_system,
                  "constrained operator is singular or indefinite (pivot ratio " + std::to_string(dmin / dmax) + ")");
    }
  } else {
    s.cg.setTolerance(options.tol);
    s.cg.setMaxIterations(options.max_iter);
    s.cg.compute(s.reduced);
    if (s.cg.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_system, "preconditioner setup failed");
    }
  }
}

ConstrainedSolver::~ConstrainedSolver() = default;
ConstrainedSolver::ConstrainedSolver(ConstrainedSolver&&) noexcept = default;
ConstrainedSolver& ConstrainedSolver::operator=(ConstrainedSolver&&) noexcept = default;

int ConstrainedSolver::reduced_size() const { return impl_->reduced_count; }

const SparseMatrix& ConstrainedSolver::matrix() const { return impl_->full; }

Vector ConstrainedSolver::solve(const Vector& rhs) const {
  return solve(rhs, impl_->constraints.dirichlet_values);
}

Vector ConstrainedSolver::solve_scaled(const Vector& rhs, double gross_scale) const {
  return impl_->solve(rhs, impl_->constraints.dirichlet_values, gross_scale);
}

Vector ConstrainedSolver::solve(const Vector& rhs, const std::vector<double>& dirichlet_values) const {
  return impl_->solve(rhs, dirichlet_values, 0.0);
}

Vector ConstrainedSolver::Impl::solve(const Vector& rhs, const std::vector<double>& dirichlet_values,
                                      double gross_scale) const {
  const auto& s = *this;
  if (rhs.size() != s.full.rows()) {
    throw Error(ErrorCode::provenance, "right-hand side length does not match operator");
  }
  if (dirichlet_values.size() != s.constraints.dirichlet_nodes.size()) {
    throw Error(ErrorCode::invalid_config, "Dirichlet value count changed between solves");
  }
  const bool periodic = s.constraints.kind == ConstraintSet::Kind::periodic;
  if (periodic && !rhs_compatible(rhs, 1e-8, gross_scale)) {
    throw Error(ErrorCode::incompatible_rhs, "periodic right-hand side does not annihilate constants (sum " +
                                                 std::to_string(rhs.sum()) + ")");
  }

  const Vector known = s.prescribed(dirichlet_values);
  const Vector lifted = rhs - s.full * known;
  Vector b = Vector::Zero(s.reduced_count);
  for (Eigen::Index i = 0; i < rhs.size(); ++i) {
    const int r = s.reduced_index[static_cast<std::size_t>(i)];
    if (r >= 0) {
      b[r] += lifted[i];
    }
  }

  Vector x = Vector::Zero(s.reduced_count);
  if (s.reduced_count > 0 && b.squaredNorm() > 0.0) {
    if (s.use_direct) {
      x = s.ldlt.solve(b);
      const double rel = (s.reduced * x - b).norm() / b.norm();
      if (!std::isfinite(rel) || rel > std::max(1e-6, s.options.tol)) {
        throw Error(ErrorCode::singular_system, "direct solve residual " + std::to_string(rel));
      }
    } else {
      x = s.cg.solve(b);
      if (s.cg.info() != Eigen::Success) {
        throw NonConvergenceError("conjugate gradient stopped after " + std::to_string(s.cg.iterations()) +
                                      " iterations",
                                  s.cg.error(), static_cast<int>(s.cg.iterations()));
      }
    }
  }

  Vector out = known;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const int r = s.reduced_index[static_cast<std::size_t>(i)];
    if (r >= 0) {
      out[i] = x[r];
    } else if (periodic) {
      out[i] = 0.0;
    }
  }
  if (periodic) {
    out.array() -= mean_value(*s.mesh, out);
  }
  return out;
}

Vector solve_system(const Mesh& mesh, const SparseSystem& system, const SolverOptions& options) {
  ConstrainedSolver solver(mesh, system.matrix, system.constraints, options);
  return solver.solve(system.rhs);
}

void configure_threads_from_env() {
  if (const char* env = std::getenv("HOMS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) {
      Eigen::setNbThreads(n);
    }
  }
}

}  // namespace homs
