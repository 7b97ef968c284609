#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "homs/config.hpp"
#include "homs/io.hpp"
#include "homs/macro_solver.hpp"
#include "homs/offline_store.hpp"
#include "homs/reconstructor.hpp"

namespace homs {

/// P1 interpolation of a coarse nodal field at the fine nodes.
/// Throws ErrorCode::geometry_mismatch when a fine node lies outside the coarse mesh.
[[nodiscard]] Vector transfer_to_fine(const Mesh& coarse, const Vector& field, const Mesh& fine);

enum class Norm { l2, h1_semi };

/// ||numeric - reference|| / ||reference||. Throws
/// ErrorCode::undefined_relative_error when the reference norm is zero.
[[nodiscard]] double relative_error(const Vector& numeric, const Vector& reference, const Mesh& mesh, Norm norm);

/// Relative errors of one time level, indexed by reconstruction order
/// (homogenized, LOMS, HOMS).
struct ErrorRow {
  int step = 0;
  double time = 0.0;
  std::array<double, 3> temperature_l2{};
  std::array<double, 3> temperature_h1{};
  std::array<double, 3> potential_l2{};
  std::array<double, 3> potential_h1{};
};

struct WallTimes {
  double offline = 0.0;
  double online = 0.0;
  double dns = 0.0;
  bool table_cached = false;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  WallTimes times;

  [[nodiscard]] const ErrorRow& final() const;
  [[nodiscard]] CsvTable csv() const;
};

/// Column names of the error series, in file order.
[[nodiscard]] const std::vector<std::string>& error_csv_header();

/// One row per table temperature: u0, S_hat, k_hat and sigma_hat entries
/// (11, 12, 21, 22) and the Joule-tensor identity residual.
[[nodiscard]] CsvTable homogenized_csv(const OfflineTable& table);

/// Per level: step, time, L2 and H1-seminorm of u and phi, electric energy residual.
[[nodiscard]] CsvTable trajectory_norms(const Mesh& mesh, const MacroTrajectory& trajectory);

/// The cached table when its key matches the config, else a fresh build that
/// replaces the cache. `seconds` receives the load or build time.
[[nodiscard]] OfflineTable obtain_table(const ExperimentConfig& config, bool* cached = nullptr,
                                        double* seconds = nullptr);

/// Error levels of a finished run. Level 0 is skipped: the initial field is
/// constant, so the H1 reference norm vanishes there.
[[nodiscard]] std::vector<ErrorRow> compare_trajectories(const Mesh& coarse, const MacroTrajectory& macro,
                                                         const OfflineTable& table, const Mesh& fine,
                                                         const MacroTrajectory& dns, double epsilon);

struct ExperimentResult {
  ErrorReport report;
  std::filesystem::path csv_path;
  std::vector<std::filesystem::path> vtk_paths;
};

/// Offline table, macro solve, reconstruction, DNS and errors. Writes
/// errors.csv, timings.json and the configured VTK snapshots to the output
/// directory. Stage failures are rethrown with the stage name prefixed.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config);

/// Least-squares slope of log(error) against log(parameter).
[[nodiscard]] double observed_order(const std::vector<double>& parameter, const std::vector<double>& error);

struct SweepResult {
  std::string parameter_name;
  std::vector<std::string> error_names;
  std::vector<double> parameter;
  /// errors[j][i]: metric j on rung i.
  std::vector<std::vector<double>> errors;
  std::vector<double> orders;

  [[nodiscard]] CsvTable csv() const;
  /// One row holding the observed order of each metric.
  [[nodiscard]] CsvTable orders_csv() const;
};

/// Final-time relative errors of every order for each epsilon.
[[nodiscard]] SweepResult sweep_epsilon(const ExperimentConfig& config, const std::vector<double>& epsilons);

/// Manufactured-solution macro problem with temperature-dependent isotropic
/// conductivities: u = ambient + amplitude sin(omega t) b(x), phi = b(x),
/// b = x1(1-x1)x2(1-x2).
struct ManufacturedProblem {
  double heat_capacity = 4.5;
  TemperatureLaw k = TemperatureLaw::affine(4.0, 0.0004);
  TemperatureLaw sigma = TemperatureLaw::affine(300.0, -0.015);
  double ambient = 300.0;
  double amplitude = 50.0;
  double omega = 10.0;

  [[nodiscard]] double temperature(const Vec2& x, double t) const;
  [[nodiscard]] double potential(const Vec2& x) const;
  [[nodiscard]] ProblemData data(TimeGrid time) const;
  [[nodiscard]] NodalCoefficientModel model() const;
};

/// L2 error against the exact temperature at the final time for each mesh
/// size n, with n * steps_per_division steps so dt shrinks with h.
[[nodiscard]] SweepResult sweep_macro_space(const ManufacturedProblem& problem, const std::vector<int>& mesh_sizes,
                                            double final_time, int steps_per_division);

/// L2 difference at the final time against a run with `reference_steps` steps on the same mesh.
[[nodiscard]] SweepResult sweep_macro_time(const ManufacturedProblem& problem, int mesh_size, double final_time,
                                           const std::vector<int>& steps, int reference_steps);

/// First-order cell function M_1 on each cell mesh against a run on
/// `reference_n`, compared on the reference mesh in L2.
[[nodiscard]] SweepResult sweep_cell_mesh(const InclusionSpec& geometry, const MaterialLaw& law, double u0,
                                          CellBoundaryMode mode, const std::vector<int>& mesh_sizes,
                                          int reference_n);

}  // namespace homs
