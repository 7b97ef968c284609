#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "homs/cell_solver.hpp"
#include "homs/coefficients.hpp"
#include "homs/materials.hpp"
#include "homs/mesh.hpp"

namespace homs {

/// Unit cell [0,1]^2 on an n x n structured mesh with one inclusion.
struct CellMeshSpec {
  int n = 32;
  InclusionSpec geometry;

  [[nodiscard]] Mesh build() const;
};

struct OfflineEntry {
  CellFunctionSet cells;
  HomogenizedCoefficients homog;
};

struct OfflineTable {
  std::vector<double> temperatures;
  std::vector<OfflineEntry> entries;
  std::string cell_mesh_fingerprint;
  std::string law_fingerprint;
  CellBoundaryMode bc_mode = CellBoundaryMode::dirichlet;
  bool chain_rule_terms = true;
  CellMeshSpec cell_spec;
  std::shared_ptr<const Mesh> cell_mesh;

  /// Throws ErrorCode::invalid_table on an empty, non-uniform or inconsistent table.
  void validate() const;
  [[nodiscard]] double spacing() const;
};

/// SHA-256 of the node coordinates, connectivity and phase labels.
[[nodiscard]] std::string mesh_fingerprint(const Mesh& mesh);
[[nodiscard]] std::string law_fingerprint(const MaterialLaw& law);

struct TableBuildOptions {
  SolverOptions solver;
  SecondOrderOptions second_order;
  /// Worker threads across temperatures; 0 reads HOMS_THREADS (default 1).
  int threads = 0;
};

/// Equidistant grid of `n_points` temperatures over `range`, each with its
/// first- and second-order cell functions and homogenized coefficients.
[[nodiscard]] OfflineTable build_table(const CellMeshSpec& cell, const MaterialLaw& law, TemperatureRange range,
                                       int n_points, CellBoundaryMode mode, const TableBuildOptions& options = {});

/// Bracketing knots of u0: value = (1 - weight) * entry[lo] + weight * entry[hi].
struct Bracket {
  int lo = 0;
  int hi = 0;
  double weight = 0.0;
  bool clamped = false;
};

/// Clamps to the grid (with a logged warning) outside the table range.
[[nodiscard]] Bracket bracket(const OfflineTable& table, double u0);

[[nodiscard]] HomogenizedCoefficients interpolate_homogenized(const OfflineTable& table, double u0);
[[nodiscard]] OfflineEntry interpolate(const OfflineTable& table, double u0);

enum class TableSection { homogenized, cell_functions, all };

/// Temperature derivative: central differences at interior knots, one-sided at
/// the ends, then piecewise-linear in u0. Unselected sections stay empty.
[[nodiscard]] OfflineEntry d_du(const OfflineTable& table, double u0, TableSection section = TableSection::all);

/// Weighted sum of two entries, field by field.
[[nodiscard]] OfflineEntry blend(const OfflineEntry& a, double wa, const OfflineEntry& b, double wb);

void save_table(const OfflineTable& table, const std::filesystem::path& dir);

/// Throws ErrorCode::corrupt_table on a malformed or truncated directory.
[[nodiscard]] OfflineTable load_table(const std::filesystem::path& dir);

/// What a cached table must have been built from to be reused.
struct TableKey {
  CellMeshSpec cell;
  MaterialLaw law;
  CellBoundaryMode mode = CellBoundaryMode::dirichlet;
  bool chain_rule_terms = true;
  /// Grid checks are skipped when n_points is 0.
  TemperatureRange range;
  int n_points = 0;
};

/// Throws ErrorCode::stale_table when the table was built from anything else.
void require_fresh(const OfflineTable& table, const TableKey& key);

/// load_table followed by require_fresh.
[[nodiscard]] OfflineTable load_table(const std::filesystem::path& dir, const TableKey& key);

}  // namespace homs
