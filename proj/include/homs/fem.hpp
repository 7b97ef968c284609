#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "homs/mesh.hpp"

namespace homs {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using GradientField = std::vector<Vec2>;

/// Nodal values tagged with the mesh they live on.
struct NodalField {
  Vector values;
  MeshId mesh_id;
};

using ScalarFunction = std::function<double(const Vec2&)>;

/// Prescribed normal flux g(x) on the sides carrying `tag`.
struct NeumannData {
  BoundaryTag tag = BoundaryTag::none;
  ScalarFunction flux;
};

/// Throws ErrorCode::non_elliptic_assembly on a nonpositive or non-finite entry.
[[nodiscard]] SparseMatrix assemble_stiffness(const Mesh& mesh, const Vector& coeff);
/// Tensor-valued coefficient per element: int (C grad u) . grad v.
[[nodiscard]] SparseMatrix assemble_stiffness(const Mesh& mesh, const std::vector<Mat2>& coeff);
[[nodiscard]] SparseMatrix assemble_mass(const Mesh& mesh, const Vector& weight);

/// Weak functional of a volumetric source plus boundary fluxes. Sources use the
/// edge-midpoint rule, fluxes Simpson's rule on each boundary edge.
[[nodiscard]] Vector assemble_load(const Mesh& mesh, const ScalarFunction& source,
                                   const std::vector<NeumannData>& neumann = {});

/// Integral of an element-wise constant source against every basis function.
[[nodiscard]] Vector load_elementwise(const Mesh& mesh, const Vector& per_element);

/// Integral of an element-wise constant vector g against basis gradients: int g . grad v.
[[nodiscard]] Vector load_divergence(const Mesh& mesh, const std::vector<Vec2>& per_element);

/// Constant gradient of a nodal field on each element.
[[nodiscard]] std::vector<Vec2> element_gradients(const Mesh& mesh, const Vector& field);

/// Nodal gradient as the area-weighted average of element gradients around each node.
[[nodiscard]] GradientField recover_gradient(const Mesh& mesh, const Vector& field);

/// Component `c` of a gradient field as a nodal vector.
[[nodiscard]] Vector component(const GradientField& g, int c);

/// Average of nodal values over each element.
[[nodiscard]] Vector element_average(const Mesh& mesh, const Vector& nodal);

[[nodiscard]] double integrate(const Mesh& mesh, const Vector& field);
[[nodiscard]] double mean_value(const Mesh& mesh, const Vector& field);
[[nodiscard]] double l2_norm(const Mesh& mesh, const Vector& field);
[[nodiscard]] double h1_seminorm(const Mesh& mesh, const Vector& field);

/// For each node, the node it is identified with under opposite-face
/// periodicity (right to left, top to bottom). Structured meshes only.
[[nodiscard]] std::vector<int> periodic_masters(const Mesh& mesh);

/// How boundary conditions enter a linear system.
struct ConstraintSet {
  enum class Kind { none, dirichlet, periodic };
  Kind kind = Kind::none;
  std::vector<int> dirichlet_nodes;
  std::vector<double> dirichlet_values;
  std::vector<int> masters;

  [[nodiscard]] static ConstraintSet dirichlet(std::vector<int> nodes, std::vector<double> values);
  [[nodiscard]] static ConstraintSet dirichlet(std::vector<int> nodes, double value);
  [[nodiscard]] static ConstraintSet periodic(const Mesh& mesh);
};

struct SparseSystem {
  SparseMatrix matrix;
  Vector rhs;
  ConstraintSet constraints;
};

struct SolverOptions {
  enum class Method { automatic, cg, direct };
  Method method = Method::automatic;
  double tol = 1e-10;
  int max_iter = 20000;
  /// Reduced systems up to this many unknowns are factorized directly in automatic mode.
  int direct_limit = 250000;
};

[[nodiscard]] SolverOptions::Method parse_solver_method(const std::string& text);

/// Rewrites constrained rows as identity rows and moves known values to the
/// right-hand side, keeping the matrix symmetric.
void apply_dirichlet(SparseSystem& system);

/// A constrained operator prepared once and reused for many right-hand sides.
/// Dirichlet values may change between solves; the constrained node set may not.
/// Periodic mode pins one node and returns the zero-mean representative.
class ConstrainedSolver {
 public:
  ConstrainedSolver(const Mesh& mesh, const SparseMatrix& matrix, ConstraintSet constraints,
                    SolverOptions options = {});
  ~ConstrainedSolver();
  ConstrainedSolver(ConstrainedSolver&&) noexcept;
  ConstrainedSolver& operator=(ConstrainedSolver&&) noexcept;

  /// Throws ErrorCode::incompatible_rhs in periodic mode when rhs does not annihilate constants.
  [[nodiscard]] Vector solve(const Vector& rhs) const;
  [[nodiscard]] Vector solve(const Vector& rhs, const std::vector<double>& dirichlet_values) const;
  /// `gross_scale` bounds the rhs magnitude before cancellation and floors the compatibility test.
  [[nodiscard]] Vector solve_scaled(const Vector& rhs, double gross_scale) const;

  [[nodiscard]] int reduced_size() const;
  [[nodiscard]] const SparseMatrix& matrix() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

[[nodiscard]] Vector solve_system(const Mesh& mesh, const SparseSystem& system, const SolverOptions& options = {});

/// Compatibility test shared by periodic solves: |sum b| <= tol * max(sum |b|, gross_scale).
[[nodiscard]] bool rhs_compatible(const Vector& rhs, double tol = 1e-8, double gross_scale = 0.0);

/// Sum over elements of area * (|f| + |g| * sum |grad phi_i|): the size of the
/// load assembled from `per_element` and `flux` before any cancellation.
[[nodiscard]] double load_magnitude(const Mesh& mesh, const Vector& per_element, const std::vector<Vec2>& flux);

/// Applies the thread count from the HOMS_THREADS environment variable, if set.
void configure_threads_from_env();

}  // namespace homs
