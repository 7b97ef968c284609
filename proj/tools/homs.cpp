#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "homs/config.hpp"
#include "homs/dns.hpp"
#include "homs/error.hpp"
#include "homs/harness.hpp"
#include "homs/homogenizer.hpp"
#include "homs/io.hpp"
#include "homs/macro_solver.hpp"
#include "homs/reconstructor.hpp"

namespace fs = std::filesystem;
using namespace homs;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  bool quiet = false;
};

/// Counts failed checks and prints one line per check.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    fmt::print("{} {}\n", ok ? "[ok]  " : "[FAIL]", what);
    failures_ += ok ? 0 : 1;
  }
  [[nodiscard]] int exit_code() const { return failures_ == 0 ? 0 : 1; }

 private:
  int failures_ = 0;
};

ExperimentConfig load(const Common& c) {
  if (c.config.empty()) {
    return parse_config("", fs::current_path(), c.overrides);
  }
  return load_config(c.config, c.overrides);
}

fs::path output_dir(const ExperimentConfig& config) {
  const fs::path out = config.resolve(config.output_dir);
  fs::create_directories(out);
  return out;
}

bool all_finite(const std::vector<Vector>& fields) {
  for (const auto& f : fields) {
    if (!f.allFinite()) {
      return false;
    }
  }
  return true;
}

double max_energy_residual(const MacroTrajectory& t) {
  double m = 0.0;
  for (double r : t.energy_residual) {
    m = std::max(m, r);
  }
  return m;
}

void write_levels(const ExperimentConfig& config, const fs::path& out, const std::string& prefix, const Mesh& mesh,
                  const MacroTrajectory& t) {
  if (config.vtk_stride <= 0) {
    return;
  }
  for (int n = 0; n <= t.completed_steps(); ++n) {
    if (n % config.vtk_stride == 0 || n == t.completed_steps()) {
      write_vtk(out / fmt::format("{}_{:05d}.vtk", prefix, n), mesh, {{"u", &t.u[n]}, {"phi", &t.phi[n]}});
    }
  }
}

int cmd_offline(const ExperimentConfig& config) {
  config.validate();
  bool cached = false;
  double seconds = 0.0;
  const auto table = obtain_table(config, &cached, &seconds);
  fmt::print("offline table {} at {} ({} temperatures in [{}, {}], {} mode, {:.3f} s)\n",
             cached ? "reused" : "built", config.resolve(config.table_dir).string(), table.temperatures.size(),
             table.temperatures.front(), table.temperatures.back(), to_string(table.bc_mode), seconds);
  Checks checks;
  checks.expect(table.temperatures.size() == static_cast<std::size_t>(config.table_points), "table has the configured grid");
  return checks.exit_code();
}

int cmd_homogenize(const ExperimentConfig& config) {
  config.validate();
  const auto table = obtain_table(config);
  const auto csv = homogenized_csv(table);
  const fs::path path = output_dir(config) / "homogenized.csv";
  write_csv(path, csv);
  std::cout << read_text_file(path);
  const double tol = config.bc_mode == CellBoundaryMode::periodic ? 1e-8 : 1e-6;
  const auto bounds = ellipticity_bounds(config.law, config.table_range);
  bool identity = true;
  bool elliptic = true;
  for (const auto& e : table.entries) {
    identity = identity && check_sigma_star_identity(e.homog, tol).pass;
    elliptic = elliptic && check_ellipticity(e.homog, bounds).pass;
  }
  Checks checks;
  checks.expect(identity, fmt::format("Joule tensor equals the electric tensor to {:g} at every temperature", tol));
  checks.expect(elliptic, "homogenized tensors stay within the phase ellipticity bounds");
  return checks.exit_code();
}

int cmd_solve(const ExperimentConfig& config) {
  config.validate();
  const auto table = obtain_table(config);
  const Mesh coarse = build_structured_mesh(Rect::unit(), config.macro_n);
  const auto model = table_model(table);
  const auto traj = run_trajectory(coarse, model, config.problem(), config.solver);
  const fs::path out = output_dir(config);
  write_csv(out / "macro_norms.csv", trajectory_norms(coarse, traj));
  write_levels(config, out, "macro", coarse, traj);
  fmt::print("macro solve: {} steps on {} nodes, max temperature {:.6g}\n", traj.completed_steps(),
             coarse.node_count(), traj.u.back().maxCoeff());
  Checks checks;
  checks.expect(all_finite(traj.u) && all_finite(traj.phi), "all levels finite");
  checks.expect(max_energy_residual(traj) <= 1e-8, "electric energy identity holds to 1e-8");
  return checks.exit_code();
}

int cmd_dns(const ExperimentConfig& config) {
  config.validate();
  const auto dns = solve_dns(config.dns());
  const fs::path out = output_dir(config);
  write_csv(out / "dns_norms.csv", trajectory_norms(dns.mesh, dns.trajectory));
  write_levels(config, out, "dns", dns.mesh, dns.trajectory);
  fmt::print("dns ({}): {} steps on {} nodes, max temperature {:.6g}\n", to_string(config.linearization),
             dns.trajectory.completed_steps(), dns.mesh.node_count(), dns.trajectory.u.back().maxCoeff());
  Checks checks;
  checks.expect(all_finite(dns.trajectory.u) && all_finite(dns.trajectory.phi), "all levels finite");
  checks.expect(max_energy_residual(dns.trajectory) <= 1e-8, "electric energy identity holds to 1e-8");
  return checks.exit_code();
}

int cmd_reconstruct(const ExperimentConfig& config, const std::string& order_text, int step) {
  config.validate();
  const auto order = parse_reconstruction_order(order_text);
  const auto table = obtain_table(config);
  const Mesh coarse = build_structured_mesh(Rect::unit(), config.macro_n);
  const auto model = table_model(table);
  const auto traj = run_trajectory(coarse, model, config.problem(), config.solver);
  const Mesh fine = build_dns_mesh(config.dns());
  const int n = step < 0 ? config.steps : step;
  const auto r = reconstruct(coarse, traj, table, ReconstructionRequest{config.epsilon, order, &fine, n});
  const fs::path path = output_dir(config) / fmt::format("{}_{:05d}.vtk", to_string(order), n);
  write_vtk(path, fine, {{"u", &r.u}, {"phi", &r.phi}});
  fmt::print("{} fields at step {} on {} nodes written to {}\n", to_string(order), n, fine.node_count(),
             path.string());
  Checks checks;
  checks.expect(r.u.allFinite() && r.phi.allFinite(), "reconstructed fields finite");
  return checks.exit_code();
}

int cmd_compare(const ExperimentConfig& config) {
  const auto result = run_experiment(config);
  const auto& f = result.report.final();
  const auto& t = result.report.times;
  fmt::print("errors written to {}\n", result.csv_path.string());
  fmt::print("final step {}: Terr {:.4e} {:.4e} {:.4e} | TErr {:.4e} {:.4e} {:.4e}\n", f.step, f.temperature_l2[0],
             f.temperature_l2[1], f.temperature_l2[2], f.temperature_h1[0], f.temperature_h1[1], f.temperature_h1[2]);
  fmt::print("               Perr {:.4e} {:.4e} {:.4e} | PErr {:.4e} {:.4e} {:.4e}\n", f.potential_l2[0],
             f.potential_l2[1], f.potential_l2[2], f.potential_h1[0], f.potential_h1[1], f.potential_h1[2]);
  fmt::print("wall time: offline {:.3f} s ({}), online {:.3f} s, dns {:.3f} s\n", t.offline,
             t.table_cached ? "cached" : "built", t.online, t.dns);
  Checks checks;
  checks.expect(f.temperature_l2[2] <= f.temperature_l2[1] && f.temperature_l2[1] <= f.temperature_l2[0],
                "Terr2 <= Terr1 <= Terr0 at the final time");
  checks.expect(f.temperature_h1[2] < f.temperature_h1[1], "TErr2 < TErr1 at the final time");
  checks.expect(f.potential_h1[2] < f.potential_h1[1], "PErr2 < PErr1 at the final time");
  return checks.exit_code();
}

int cmd_sweep(const ExperimentConfig& config, const std::string& kind, const std::vector<double>& values,
              const std::string& metric, double min_order) {
  SweepResult s;
  if (kind == "epsilon") {
    s = sweep_epsilon(config, values.empty() ? std::vector<double>{0.25, 0.125, 0.0625} : values);
  } else if (kind == "space" || kind == "time" || kind == "cell") {
    std::vector<int> rungs;
    for (double v : values) {
      rungs.push_back(static_cast<int>(v));
    }
    if (kind == "space") {
      s = sweep_macro_space(ManufacturedProblem{}, rungs.empty() ? std::vector<int>{8, 16, 32} : rungs,
                            config.final_time, 1);
    } else if (kind == "time") {
      s = sweep_macro_time(ManufacturedProblem{}, config.macro_n, config.final_time,
                           rungs.empty() ? std::vector<int>{5, 10, 20} : rungs, 640);
    } else {
      s = sweep_cell_mesh(config.geometry, config.law, config.table_range.lo, config.bc_mode,
                          rungs.empty() ? std::vector<int>{8, 16, 32} : rungs,
                          4 * (rungs.empty() ? 32 : rungs.back()));
    }
  } else {
    throw Error(ErrorCode::invalid_config, "unknown sweep kind '" + kind + "' (epsilon, space, time, cell)");
  }
  const fs::path out = output_dir(config);
  write_csv(out / fmt::format("sweep_{}.csv", kind), s.csv());
  write_csv(out / fmt::format("sweep_{}_orders.csv", kind), s.orders_csv());
  for (std::size_t j = 0; j < s.error_names.size(); ++j) {
    fmt::print("{:>16}:", s.error_names[j]);
    for (double e : s.errors[j]) {
      fmt::print(" {:.4e}", e);
    }
    fmt::print("  order {:.3f}\n", s.orders[j]);
  }
  Checks checks;
  if (!metric.empty()) {
    const auto it = std::find(s.error_names.begin(), s.error_names.end(), metric);
    if (it == s.error_names.end()) {
      throw Error(ErrorCode::invalid_config, "sweep has no metric '" + metric + "'");
    }
    const auto j = static_cast<std::size_t>(it - s.error_names.begin());
    checks.expect(s.orders[j] >= min_order, fmt::format("{} observed order {:.3f} >= {}", metric, s.orders[j], min_order));
  }
  return checks.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Higher-order multiscale thermo-electric solver"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config, "experiment file (TOML)");
  app.add_option("-s,--set", common.overrides, "override a key, e.g. --set geometry.epsilon=0.25");
  app.add_flag("-q,--quiet", common.quiet, "only print warnings and errors");

  auto* offline = app.add_subcommand("offline", "build or reuse the offline cell-function table");
  auto* homogenize = app.add_subcommand("homogenize", "print the homogenized coefficients of the table");
  auto* solve = app.add_subcommand("solve", "run the homogenized macro problem");
  auto* dns = app.add_subcommand("dns", "run the fine-mesh reference simulation");
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "reconstruct fine-scale fields from a macro run");
  std::string order = "homs";
  int step = -1;
  reconstruct_cmd->add_option("--order", order, "homogenized, loms or homs");
  reconstruct_cmd->add_option("--step", step, "time level (default: final)");
  auto* compare = app.add_subcommand("compare", "full pipeline with errors against the reference");
  auto* sweep = app.add_subcommand("sweep", "convergence ladder");
  std::string kind = "epsilon";
  std::vector<double> values;
  std::string metric;
  double min_order = 0.0;
  sweep->add_option("--kind", kind, "epsilon, space, time or cell");
  sweep->add_option("--values", values, "rungs: epsilons, mesh sizes or step counts");
  sweep->add_option("--check", metric, "metric whose observed order is checked");
  sweep->add_option("--min-order", min_order, "minimum observed order for --check");

  CLI11_PARSE(app, argc, argv);
  if (common.quiet) {
    spdlog::set_level(spdlog::level::warn);
  }
  try {
    const ExperimentConfig config = load(common);
    if (*offline) return cmd_offline(config);
    if (*homogenize) return cmd_homogenize(config);
    if (*solve) return cmd_solve(config);
    if (*dns) return cmd_dns(config);
    if (*reconstruct_cmd) return cmd_reconstruct(config, order, step);
    if (*compare) return cmd_compare(config);
    if (*sweep) return cmd_sweep(config, kind, values, metric, min_order);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 2;
}
