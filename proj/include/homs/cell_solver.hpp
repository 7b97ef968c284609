#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "homs/coefficients.hpp"
#include "homs/fem.hpp"
#include "homs/materials.hpp"
#include "homs/mesh.hpp"

namespace homs {

enum class CellBoundaryMode { dirichlet, periodic };

[[nodiscard]] CellBoundaryMode parse_cell_boundary_mode(const std::string& text);
[[nodiscard]] std::string_view to_string(CellBoundaryMode mode);

/// Two-index family of nodal fields, indexed [a1][a2].
using FieldPair = std::array<Vector, 2>;
using FieldFamily = std::array<FieldPair, 2>;

struct FirstOrderFields {
  double u0 = 0.0;
  MeshId mesh_id;
  FieldPair M;
  FieldPair N;
};

/// Temperature derivatives of the first-order fields.
struct FirstOrderDerivatives {
  FieldPair dM;
  FieldPair dN;
};

struct CellFunctionSet {
  double u0 = 0.0;
  MeshId mesh_id;
  FieldPair M;
  FieldPair N;
  Vector Q;
  FieldFamily M2;
  FieldFamily R2;
  FieldFamily H;
  FieldFamily G;
  FieldFamily N2;
  FieldFamily Z2;
  FieldFamily W;

  /// Every nodal field in a fixed order, paired with its name.
  [[nodiscard]] std::vector<std::pair<std::string, const Vector*>> fields() const;
  [[nodiscard]] std::vector<std::pair<std::string, Vector*>> fields();
};

/// Cell conductivity operators at one temperature, factorized once and reused
/// for every right-hand side.
class CellOperators {
 public:
  CellOperators(const Mesh& mesh, const MaterialLaw& law, double u0, CellBoundaryMode mode,
                const SolverOptions& options = {});

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] double u0() const { return u0_; }
  [[nodiscard]] CellBoundaryMode mode() const { return mode_; }
  [[nodiscard]] const std::vector<CoefficientSample>& samples() const { return samples_; }
  [[nodiscard]] const Vector& k() const { return k_; }
  [[nodiscard]] const Vector& sigma() const { return sigma_; }

  /// `gross_scale` is the load size before cancellation (see load_magnitude).
  [[nodiscard]] Vector solve_thermal(const Vector& rhs, double gross_scale = 0.0) const;
  [[nodiscard]] Vector solve_electric(const Vector& rhs, double gross_scale = 0.0) const;

 private:
  const Mesh* mesh_;
  double u0_;
  CellBoundaryMode mode_;
  std::vector<CoefficientSample> samples_;
  Vector k_;
  Vector sigma_;
  std::shared_ptr<ConstrainedSolver> thermal_;
  std::shared_ptr<ConstrainedSolver> electric_;
};

/// Element-wise coefficient samples of the phase laws at a uniform temperature.
[[nodiscard]] std::vector<CoefficientSample> sample_elements(const Mesh& mesh, const MaterialLaw& law, double u0);

/// Solves int coeff grad X . grad v = rhs(v) under the cell boundary mode.
[[nodiscard]] NodalField solve_cell_problem(const Mesh& mesh, const Vector& coeff, const Vector& rhs,
                                            CellBoundaryMode mode, const SolverOptions& options = {});

[[nodiscard]] FirstOrderFields solve_first_order(const CellOperators& ops);
[[nodiscard]] FirstOrderFields solve_first_order(const Mesh& mesh, const MaterialLaw& law, double u0,
                                                 CellBoundaryMode mode, const SolverOptions& options = {});

struct SecondOrderOptions {
  /// Solve the gradient-product families that carry temperature derivatives of
  /// the first-order fields; when false they are left at zero.
  bool chain_rule_terms = true;
};

/// Throws ErrorCode::dependency_order when `homog` was not computed at the same temperature.
[[nodiscard]] CellFunctionSet solve_second_order(const CellOperators& ops, const FirstOrderFields& first,
                                                 const HomogenizedCoefficients& homog,
                                                 const FirstOrderDerivatives& d1,
                                                 const SecondOrderOptions& options = {});

}  // namespace homs
