#pragma once

#include <string>
#include <vector>

#include "homs/macro_solver.hpp"
#include "homs/materials.hpp"
#include "homs/mesh.hpp"
#include "homs/problem.hpp"

namespace homs {

enum class Linearization { extrapolated, picard };

[[nodiscard]] Linearization parse_linearization(const std::string& text);
[[nodiscard]] std::string_view to_string(Linearization mode);

/// Phase laws sampled on each element of a phase-labelled mesh: nodal values
/// of the element's phase law at the nodal temperatures, averaged.
class PhaseCoefficientModel final : public CoefficientModel {
 public:
  explicit PhaseCoefficientModel(MaterialLaw law) : law_(std::move(law)) {}

  [[nodiscard]] ElementCoefficients evaluate(const Mesh& mesh, const Vector& temperature) const override;

 private:
  MaterialLaw law_;
};

struct DnsConfig {
  double epsilon = 0.125;
  int elements_per_cell = 12;
  Rect domain = Rect::unit();
  InclusionSpec geometry;
  MaterialLaw law = MaterialLaw::benchmark_composite();
  ProblemData problem;
  Linearization linearization = Linearization::extrapolated;
  int picard_max_iter = 30;
  /// Relative max-norm change between Picard iterates.
  double picard_tol = 1e-10;
  SolverOptions solver;
};

/// Resolves every cell with elements_per_cell elements per side. Throws
/// ErrorCode::invalid_periodicity unless the domain is tiled by whole cells.
[[nodiscard]] Mesh build_dns_mesh(const DnsConfig& config);

struct DnsResult {
  Mesh mesh;
  MacroTrajectory trajectory;
  /// Picard iterations used per step (empty for the extrapolated scheme).
  std::vector<int> picard_iterations;
};

[[nodiscard]] DnsResult solve_dns(const DnsConfig& config);

}  // namespace homs
