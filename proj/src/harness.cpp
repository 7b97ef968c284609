#include "homs/harness.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "homs/dns.hpp"
#include "homs/error.hpp"
#include "homs/fem.hpp"
#include "homs/homogenizer.hpp"

namespace homs {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Work>
auto stage(const char* name, Work work) {
  try {
    return work();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("stage {}: {}", name, e.what()));
  }
}

constexpr std::array<ReconstructionOrder, 3> kOrders = {ReconstructionOrder::homogenized, ReconstructionOrder::loms,
                                                        ReconstructionOrder::homs};

ErrorRow compare_level(const Mesh& coarse, const MacroTrajectory& macro, const OfflineTable& table, const Mesh& fine,
                       const MacroTrajectory& dns, double epsilon, int n) {
  const MacroSnapshot snapshot(coarse, macro, n);
  ErrorRow row;
  row.step = n;
  row.time = macro.time.at(n);
  for (std::size_t o = 0; o < kOrders.size(); ++o) {
    const auto r = reconstruct(snapshot, table, fine, epsilon, kOrders[o]);
    row.temperature_l2[o] = relative_error(r.u, dns.u[n], fine, Norm::l2);
    row.temperature_h1[o] = relative_error(r.u, dns.u[n], fine, Norm::h1_semi);
    row.potential_l2[o] = relative_error(r.phi, dns.phi[n], fine, Norm::l2);
    row.potential_h1[o] = relative_error(r.phi, dns.phi[n], fine, Norm::h1_semi);
  }
  return row;
}

std::vector<double> row_values(const ErrorRow& r) {
  std::vector<double> v;
  for (const auto* a : {&r.temperature_l2, &r.temperature_h1, &r.potential_l2, &r.potential_h1}) {
    v.insert(v.end(), a->begin(), a->end());
  }
  return v;
}

std::vector<std::string> metric_names() {
  const auto& h = error_csv_header();
  return {h.begin() + 2, h.end()};
}

void write_snapshots(const ExperimentConfig& config, const fs::path& out, const Mesh& coarse,
                     const MacroTrajectory& macro, const OfflineTable& table, const Mesh& fine,
                     const MacroTrajectory& dns, std::vector<fs::path>& written) {
  if (config.vtk_stride <= 0) {
    return;
  }
  for (int n = 0; n <= config.steps; ++n) {
    if (n % config.vtk_stride != 0 && n != config.steps) {
      continue;
    }
    const MacroSnapshot snapshot(coarse, macro, n);
    const auto loms = reconstruct(snapshot, table, fine, config.epsilon, ReconstructionOrder::loms);
    const auto homs = reconstruct(snapshot, table, fine, config.epsilon, ReconstructionOrder::homs);
    const auto fine_path = out / fmt::format("fields_{:05d}.vtk", n);
    write_vtk(fine_path, fine,
              {{"u_dns", &dns.u[n]},
               {"phi_dns", &dns.phi[n]},
               {"u_loms", &loms.u},
               {"phi_loms", &loms.phi},
               {"u_homs", &homs.u},
               {"phi_homs", &homs.phi}});
    const auto macro_path = out / fmt::format("macro_{:05d}.vtk", n);
    write_vtk(macro_path, coarse, {{"u", &macro.u[n]}, {"phi", &macro.phi[n]}});
    written.push_back(fine_path);
    written.push_back(macro_path);
  }
}

}  // namespace

Vector transfer_to_fine(const Mesh& coarse, const Vector& field, const Mesh& fine) {
  if (static_cast<std::size_t>(field.size()) != coarse.node_count()) {
    throw Error(ErrorCode::provenance, "field does not match the coarse mesh");
  }
  Vector out(static_cast<Eigen::Index>(fine.node_count()));
  for (std::size_t i = 0; i < fine.node_count(); ++i) {
    try {
      out[static_cast<Eigen::Index>(i)] = coarse.evaluate(field, fine.nodes()[i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::interpolation) {
        throw;
      }
      const Vec2& p = fine.nodes()[i];
      throw Error(ErrorCode::geometry_mismatch,
                  fmt::format("fine node {} at ({}, {}) lies outside the coarse mesh", i, p.x(), p.y()));
    }
  }
  return out;
}

double relative_error(const Vector& numeric, const Vector& reference, const Mesh& mesh, Norm norm) {
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  if (numeric.size() != n || reference.size() != n) {
    throw Error(ErrorCode::provenance, "fields do not match the comparison mesh");
  }
  auto measure = [&](const Vector& v) { return norm == Norm::l2 ? l2_norm(mesh, v) : h1_seminorm(mesh, v); };
  const double denom = measure(reference);
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::undefined_relative_error, "reference field has zero norm");
  }
  return measure(numeric - reference) / denom;
}

const std::vector<std::string>& error_csv_header() {
  static const std::vector<std::string> header = {"step",  "time",  "Terr0", "Terr1", "Terr2", "TErr0", "TErr1",
                                                  "TErr2", "Perr0", "Perr1", "Perr2", "PErr0", "PErr1", "PErr2"};
  return header;
}

const ErrorRow& ErrorReport::final() const {
  if (rows.empty()) {
    throw Error(ErrorCode::invalid_config, "error report has no levels");
  }
  return rows.back();
}

CsvTable ErrorReport::csv() const {
  CsvTable t;
  t.header = error_csv_header();
  t.columns.assign(t.header.size(), {});
  for (const auto& r : rows) {
    t.columns[0].push_back(r.step);
    t.columns[1].push_back(r.time);
    const auto v = row_values(r);
    for (std::size_t j = 0; j < v.size(); ++j) {
      t.columns[j + 2].push_back(v[j]);
    }
  }
  return t;
}

CsvTable homogenized_csv(const OfflineTable& table) {
  CsvTable t;
  t.header = {"u0",           "S_hat",        "k_hat_11",     "k_hat_12",     "k_hat_21",
              "k_hat_22",     "sigma_hat_11", "sigma_hat_12", "sigma_hat_21", "sigma_hat_22",
              "identity_residual"};
  t.columns.assign(t.header.size(), {});
  for (const auto& e : table.entries) {
    const auto& h = e.homog;
    const std::vector<double> row = {h.u0,
                                     h.S_hat,
                                     h.k_hat(0, 0),
                                     h.k_hat(0, 1),
                                     h.k_hat(1, 0),
                                     h.k_hat(1, 1),
                                     h.sigma_hat(0, 0),
                                     h.sigma_hat(0, 1),
                                     h.sigma_hat(1, 0),
                                     h.sigma_hat(1, 1),
                                     check_sigma_star_identity(h, 1.0).residual};
    for (std::size_t j = 0; j < row.size(); ++j) {
      t.columns[j].push_back(row[j]);
    }
  }
  return t;
}

CsvTable trajectory_norms(const Mesh& mesh, const MacroTrajectory& trajectory) {
  if (!(trajectory.mesh_id == mesh.id())) {
    throw Error(ErrorCode::provenance, "trajectory was computed on another mesh");
  }
  CsvTable t;
  t.header = {"step", "time", "u_l2", "u_h1_semi", "phi_l2", "phi_h1_semi", "energy_residual"};
  t.columns.assign(t.header.size(), {});
  const int levels = std::min(static_cast<int>(trajectory.u.size()), static_cast<int>(trajectory.phi.size()));
  for (int n = 0; n < levels; ++n) {
    const std::vector<double> row = {static_cast<double>(n),
                                     trajectory.time.at(n),
                                     l2_norm(mesh, trajectory.u[n]),
                                     h1_seminorm(mesh, trajectory.u[n]),
                                     l2_norm(mesh, trajectory.phi[n]),
                                     h1_seminorm(mesh, trajectory.phi[n]),
                                     trajectory.energy_residual[n]};
    for (std::size_t j = 0; j < row.size(); ++j) {
      t.columns[j].push_back(row[j]);
    }
  }
  return t;
}

OfflineTable obtain_table(const ExperimentConfig& config, bool* cached, double* seconds) {
  const auto start = Clock::now();
  const fs::path dir = config.resolve(config.table_dir);
  const TableKey key = config.table_key();
  OfflineTable table;
  bool hit = false;
  if (fs::exists(dir)) {
    try {
      table = load_table(dir, key);
      hit = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::stale_table && e.code() != ErrorCode::corrupt_table) {
        throw;
      }
      spdlog::info("rebuilding offline table: {}", e.what());
    }
  }
  if (!hit) {
    TableBuildOptions options;
    options.solver = config.solver;
    options.second_order.chain_rule_terms = config.chain_rule_terms;
    options.threads = config.threads;
    table = build_table(config.cell_spec(), config.law, config.table_range, config.table_points, config.bc_mode,
                        options);
    fs::create_directories(dir.parent_path().empty() ? fs::path(".") : dir.parent_path());
    save_table(table, dir);
  }
  if (cached != nullptr) {
    *cached = hit;
  }
  if (seconds != nullptr) {
    *seconds = seconds_since(start);
  }
  return table;
}

std::vector<ErrorRow> compare_trajectories(const Mesh& coarse, const MacroTrajectory& macro,
                                           const OfflineTable& table, const Mesh& fine, const MacroTrajectory& dns,
                                           double epsilon) {
  if (!(dns.mesh_id == fine.id())) {
    throw Error(ErrorCode::provenance, "reference trajectory was computed on another mesh");
  }
  const int levels = std::min(macro.completed_steps(), dns.completed_steps());
  std::vector<ErrorRow> rows;
  for (int n = 1; n <= levels; ++n) {
    rows.push_back(compare_level(coarse, macro, table, fine, dns, epsilon, n));
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  WallTimes& times = result.report.times;

  const OfflineTable table = stage("offline", [&] { return obtain_table(config, &times.table_cached, &times.offline); });

  const ProblemData problem = config.problem();
  const DnsConfig dns_config = config.dns();
  const Mesh fine = stage("dns", [&] { return build_dns_mesh(dns_config); });
  const Mesh coarse = build_structured_mesh(Rect::unit(), config.macro_n);

  auto start = Clock::now();
  const MacroTrajectory macro = stage("online", [&] {
    const auto model = table_model(table);
    auto traj = run_trajectory(coarse, model, problem, config.solver);
    (void)reconstruct(coarse, traj, table, ReconstructionRequest{config.epsilon, ReconstructionOrder::homs, &fine,
                                                                  config.steps});
    return traj;
  });
  times.online = seconds_since(start);

  start = Clock::now();
  const DnsResult dns = stage("dns", [&] { return solve_dns(dns_config); });
  times.dns = seconds_since(start);

  result.report.rows =
      stage("compare", [&] { return compare_trajectories(coarse, macro, table, dns.mesh, dns.trajectory, config.epsilon); });

  stage("output", [&] {
    const fs::path out = config.resolve(config.output_dir);
    fs::create_directories(out);
    result.csv_path = out / "errors.csv";
    write_csv(result.csv_path, result.report.csv());
    nlohmann::json t = {{"offline_seconds", times.offline},
                        {"online_seconds", times.online},
                        {"dns_seconds", times.dns},
                        {"table_cached", times.table_cached}};
    write_text_file(out / "timings.json", t.dump(2) + "\n");
    write_snapshots(config, out, coarse, macro, table, dns.mesh, dns.trajectory, result.vtk_paths);
    return 0;
  });
  return result;
}

double observed_order(const std::vector<double>& parameter, const std::vector<double>& error) {
  if (parameter.size() != error.size() || parameter.size() < 2) {
    throw Error(ErrorCode::invalid_config, "order fit needs at least two matching rungs");
  }
  const auto n = static_cast<double>(parameter.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < parameter.size(); ++i) {
    if (!(parameter[i] > 0.0) || !(error[i] > 0.0)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double x = std::log(parameter[i]);
    const double y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

CsvTable SweepResult::csv() const {
  CsvTable t;
  t.header.push_back(parameter_name);
  t.header.insert(t.header.end(), error_names.begin(), error_names.end());
  t.columns.push_back(parameter);
  t.columns.insert(t.columns.end(), errors.begin(), errors.end());
  return t;
}

CsvTable SweepResult::orders_csv() const {
  CsvTable t;
  t.header = error_names;
  for (double o : orders) {
    t.columns.push_back({o});
  }
  return t;
}

namespace {

SweepResult finish_sweep(SweepResult s) {
  if (s.parameter.size() < 3) {
    throw Error(ErrorCode::invalid_config, "a convergence ladder needs at least three rungs");
  }
  for (const auto& e : s.errors) {
    s.orders.push_back(observed_order(s.parameter, e));
  }
  return s;
}

double bubble(const Vec2& x) { return x.x() * (1.0 - x.x()) * x.y() * (1.0 - x.y()); }

Vec2 bubble_gradient(const Vec2& x) {
  return {(1.0 - 2.0 * x.x()) * x.y() * (1.0 - x.y()), (1.0 - 2.0 * x.y()) * x.x() * (1.0 - x.x())};
}

double bubble_laplacian(const Vec2& x) { return -2.0 * (x.y() * (1.0 - x.y()) + x.x() * (1.0 - x.x())); }

Vector sample(const Mesh& mesh, const std::function<double(const Vec2&)>& f) {
  Vector v(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    v[static_cast<Eigen::Index>(i)] = f(mesh.nodes()[i]);
  }
  return v;
}

}  // namespace

SweepResult sweep_epsilon(const ExperimentConfig& config, const std::vector<double>& epsilons) {
  config.validate();
  SweepResult s;
  s.parameter_name = "epsilon";
  s.error_names = metric_names();
  s.errors.assign(s.error_names.size(), {});
  const OfflineTable table = stage("offline", [&] { return obtain_table(config); });
  const Mesh coarse = build_structured_mesh(Rect::unit(), config.macro_n);
  const ProblemData problem = config.problem();
  const auto model = table_model(table);
  const MacroTrajectory macro = stage("online", [&] { return run_trajectory(coarse, model, problem, config.solver); });
  for (double eps : epsilons) {
    ExperimentConfig c = config;
    c.epsilon = eps;
    c.validate();
    const DnsResult dns = stage("dns", [&] { return solve_dns(c.dns()); });
    const ErrorRow row = stage(
        "compare", [&] { return compare_level(coarse, macro, table, dns.mesh, dns.trajectory, eps, config.steps); });
    s.parameter.push_back(eps);
    const auto v = row_values(row);
    for (std::size_t j = 0; j < v.size(); ++j) {
      s.errors[j].push_back(v[j]);
    }
    spdlog::info("epsilon {}: TErr2 {:.4e}, PErr2 {:.4e}", eps, row.temperature_h1[2], row.potential_h1[2]);
  }
  return finish_sweep(std::move(s));
}

double ManufacturedProblem::temperature(const Vec2& x, double t) const {
  return ambient + amplitude * std::sin(omega * t) * bubble(x);
}

double ManufacturedProblem::potential(const Vec2& x) const { return bubble(x); }

ProblemData ManufacturedProblem::data(TimeGrid time) const {
  ProblemData p = ProblemData::benchmark(time, 0.0, 0.0, ambient);
  const ManufacturedProblem m = *this;
  // S du/dt - div(k(u) grad u) = f_u + sigma(u) |grad phi|^2 and -div(sigma(u) grad phi) = f_phi.
  p.heat_source = [m](const Vec2& x, double t) {
    const double s = m.amplitude * std::sin(m.omega * t);
    const double u = m.ambient + s * bubble(x);
    const double g2 = bubble_gradient(x).squaredNorm();
    const double du_dt = m.amplitude * m.omega * std::cos(m.omega * t) * bubble(x);
    const double div_flux = m.k.value(u) * s * bubble_laplacian(x) + m.k.d1(u) * s * s * g2;
    return m.heat_capacity * du_dt - div_flux - m.sigma.value(u) * g2;
  };
  p.charge_source = [m](const Vec2& x, double t) {
    const double s = m.amplitude * std::sin(m.omega * t);
    const double u = m.ambient + s * bubble(x);
    const double g2 = bubble_gradient(x).squaredNorm();
    return -(m.sigma.value(u) * bubble_laplacian(x) + m.sigma.d1(u) * s * g2);
  };
  return p;
}

NodalCoefficientModel ManufacturedProblem::model() const {
  const ManufacturedProblem m = *this;
  return NodalCoefficientModel([m](double u) {
    HomogenizedCoefficients h;
    h.u0 = u;
    h.S_hat = m.heat_capacity;
    h.k_hat = m.k.value(u) * Mat2::Identity();
    h.sigma_hat = m.sigma.value(u) * Mat2::Identity();
    h.sigma_hat_star = h.sigma_hat;
    return h;
  });
}

SweepResult sweep_macro_space(const ManufacturedProblem& problem, const std::vector<int>& mesh_sizes,
                              double final_time, int steps_per_division) {
  SweepResult s;
  s.parameter_name = "h";
  s.error_names = {"temperature_l2", "potential_l2"};
  s.errors.assign(2, {});
  const auto model = problem.model();
  for (int n : mesh_sizes) {
    const Mesh mesh = build_structured_mesh(Rect::unit(), n);
    const TimeGrid time{final_time, n * steps_per_division};
    const auto traj = run_trajectory(mesh, model, problem.data(time));
    const Vector u = sample(mesh, [&](const Vec2& x) { return problem.temperature(x, final_time); });
    const Vector phi = sample(mesh, [&](const Vec2& x) { return problem.potential(x); });
    s.parameter.push_back(1.0 / n);
    s.errors[0].push_back(l2_norm(mesh, traj.u.back() - u));
    // The last stored potential belongs to the half level before the final time.
    s.errors[1].push_back(l2_norm(mesh, traj.phi.back() - phi));
  }
  return finish_sweep(std::move(s));
}

SweepResult sweep_macro_time(const ManufacturedProblem& problem, int mesh_size, double final_time,
                             const std::vector<int>& steps, int reference_steps) {
  SweepResult s;
  s.parameter_name = "dt";
  s.error_names = {"temperature_l2"};
  s.errors.assign(1, {});
  const auto model = problem.model();
  const Mesh mesh = build_structured_mesh(Rect::unit(), mesh_size);
  const auto reference = run_trajectory(mesh, model, problem.data({final_time, reference_steps})).u.back();
  for (int n : steps) {
    const auto traj = run_trajectory(mesh, model, problem.data({final_time, n}));
    s.parameter.push_back(final_time / n);
    s.errors[0].push_back(l2_norm(mesh, traj.u.back() - reference));
  }
  return finish_sweep(std::move(s));
}

SweepResult sweep_cell_mesh(const InclusionSpec& geometry, const MaterialLaw& law, double u0, CellBoundaryMode mode,
                            const std::vector<int>& mesh_sizes, int reference_n) {
  SweepResult s;
  s.parameter_name = "h";
  s.error_names = {"M1_l2"};
  s.errors.assign(1, {});
  const Mesh reference_mesh = CellMeshSpec{reference_n, geometry}.build();
  const Vector reference = solve_first_order(reference_mesh, law, u0, mode).M[0];
  for (int n : mesh_sizes) {
    const Mesh mesh = CellMeshSpec{n, geometry}.build();
    const Vector m1 = solve_first_order(mesh, law, u0, mode).M[0];
    s.parameter.push_back(1.0 / n);
    s.errors[0].push_back(l2_norm(reference_mesh, transfer_to_fine(mesh, m1, reference_mesh) - reference));
  }
  return finish_sweep(std::move(s));
}

}  // namespace homs
