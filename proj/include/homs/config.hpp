#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "homs/cell_solver.hpp"
#include "homs/dns.hpp"
#include "homs/fem.hpp"
#include "homs/materials.hpp"
#include "homs/mesh.hpp"
#include "homs/offline_store.hpp"
#include "homs/problem.hpp"

namespace homs {

/// Everything one experiment reads. Relative paths resolve against `workspace`.
struct ExperimentConfig {
  std::filesystem::path workspace = ".";

  InclusionSpec geometry;
  double epsilon = 0.125;
  MaterialLaw law = MaterialLaw::benchmark_composite();

  int cell_n = 12;
  int macro_n = 48;
  int dns_elements_per_cell = 12;

  double final_time = 0.1;
  int steps = 100;

  double heat_source = 20000.0;
  double charge_source = 200.0;
  double boundary_temperature = 300.0;
  double boundary_potential = 0.0;
  double initial_temperature = 300.0;

  TemperatureRange table_range{300.0, 1000.0};
  int table_points = 20;
  CellBoundaryMode bc_mode = CellBoundaryMode::dirichlet;
  std::filesystem::path table_dir = "cache/offline";
  int threads = 0;

  SolverOptions solver;

  std::filesystem::path output_dir = "out";
  /// VTK snapshots every this many steps (0 writes none); the final level is always included.
  int vtk_stride = 0;

  bool chain_rule_terms = true;
  Linearization linearization = Linearization::extrapolated;
  int picard_max_iter = 30;
  double picard_tol = 1e-10;

  [[nodiscard]] TimeGrid time() const { return TimeGrid{final_time, steps}; }
  [[nodiscard]] ProblemData problem() const;
  [[nodiscard]] CellMeshSpec cell_spec() const { return CellMeshSpec{cell_n, geometry}; }
  [[nodiscard]] TableKey table_key() const;
  [[nodiscard]] DnsConfig dns() const;
  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;

  /// Throws ErrorCode::invalid_config (or invalid_periodicity for an epsilon
  /// that does not tile the unit square).
  void validate() const;
};

/// Parses the TOML experiment file. `overrides` are `section.key=value`
/// assignments applied on top of the file. Unknown keys are errors.
[[nodiscard]] ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& workspace,
                                            const std::vector<std::string>& overrides = {});

/// The workspace defaults to the directory holding the file; a top-level
/// `workspace` key is read relative to that directory.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& file,
                                           const std::vector<std::string>& overrides = {});

/// Round-trippable TOML text for `config` (workspace omitted).
[[nodiscard]] std::string to_toml(const ExperimentConfig& config);

}  // namespace homs
