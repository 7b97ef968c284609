#include "homs/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "homs/error.hpp"
#include "homs/io.hpp"

namespace homs {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::invalid_config, what); }

/// Reads typed keys and remembers which ones were consumed.
class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  const toml::node* find(const std::string& path) {
    used_.insert(path);
    return root_.at_path(path).node();
  }

  void number(const std::string& path, double& out) {
    if (const auto* n = find(path)) {
      const auto v = n->value<double>();
      if (!v || !n->is_number()) {
        bad(path + " must be a number");
      }
      out = *v;
    }
  }

  void integer(const std::string& path, int& out) {
    if (const auto* n = find(path)) {
      const auto v = n->value<std::int64_t>();
      if (!n->is_integer() || !v) {
        bad(path + " must be an integer");
      }
      out = static_cast<int>(*v);
    }
  }

  void boolean(const std::string& path, bool& out) {
    if (const auto* n = find(path)) {
      if (!n->is_boolean()) {
        bad(path + " must be true or false");
      }
      out = *n->value<bool>();
    }
  }

  bool string(const std::string& path, std::string& out) {
    if (const auto* n = find(path)) {
      if (!n->is_string()) {
        bad(path + " must be a string");
      }
      out = *n->value<std::string>();
      return true;
    }
    return false;
  }

  void law(const std::string& path, TemperatureLaw& out) {
    const auto* n = find(path);
    if (n == nullptr) {
      return;
    }
    if (n->is_number()) {
      out = TemperatureLaw::constant(*n->value<double>());
      return;
    }
    const auto* arr = n->as_array();
    if (arr == nullptr || arr->empty()) {
      bad(path + " must be a number or a non-empty array [intercept, slope, ...]");
    }
    std::vector<double> c;
    for (const auto& item : *arr) {
      if (!item.is_number()) {
        bad(path + " must hold numbers only");
      }
      c.push_back(*item.value<double>());
    }
    out = TemperatureLaw(std::move(c));
  }

  /// Every leaf in the document must have been read.
  void reject_unknown() const { walk(root_, ""); }

 private:
  void walk(const toml::table& t, const std::string& prefix) const {
    for (const auto& [key, node] : t) {
      const std::string path = prefix.empty() ? std::string(key.str()) : prefix + "." + std::string(key.str());
      if (const auto* sub = node.as_table()) {
        walk(*sub, path);
      } else if (!used_.contains(path)) {
        bad("unknown key '" + path + "'");
      }
    }
  }

  const toml::table& root_;
  std::set<std::string> used_;
};

toml::table parse_toml(std::string_view text, const std::string& origin) {
  try {
    return toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " (" << e.source().begin << ")";
    bad(origin + ": " + msg.str());
  }
}

/// Applies `section.key=value`; values that are not valid TOML are taken as bare strings.
void apply_override(toml::table& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    bad("override '" + assignment + "' is not of the form section.key=value");
  }
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    parsed.insert_or_assign("v", value);
  }
  toml::node& v = *parsed.get("v");

  toml::table* t = &root;
  std::string_view rest = path;
  for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
    const std::string part(rest.substr(0, dot));
    rest.remove_prefix(dot + 1);
    auto* node = t->get(part);
    if (node == nullptr) {
      t->insert(part, toml::table{});
      node = t->get(part);
    }
    t = node->as_table();
    if (t == nullptr) {
      bad("override '" + path + "' descends into a non-table key");
    }
  }
  v.visit([&](auto&& leaf) { t->insert_or_assign(std::string(rest), leaf); });
}

void read_phase(Reader& r, const std::string& section, PhaseLaw& law) {
  r.law(section + ".rho", law.rho);
  r.law(section + ".c", law.c);
  r.law(section + ".k", law.k);
  r.law(section + ".sigma", law.sigma);
}

std::string law_text(const TemperatureLaw& law) {
  std::string out = "[";
  const auto& c = law.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += (i ? ", " : "") + format_double(c[i]);
  }
  return out + "]";
}

}  // namespace

ProblemData ExperimentConfig::problem() const {
  ProblemData p = ProblemData::benchmark(time(), heat_source, charge_source, boundary_temperature);
  p.boundary_potential = constant_in_space_time(boundary_potential);
  const double u0 = initial_temperature;
  p.initial_temperature = [u0](const Vec2&) { return u0; };
  return p;
}

TableKey ExperimentConfig::table_key() const {
  return TableKey{cell_spec(), law, bc_mode, chain_rule_terms, table_range, table_points};
}

DnsConfig ExperimentConfig::dns() const {
  DnsConfig d;
  d.epsilon = epsilon;
  d.elements_per_cell = dns_elements_per_cell;
  d.geometry = geometry;
  d.law = law;
  d.problem = problem();
  d.linearization = linearization;
  d.picard_max_iter = picard_max_iter;
  d.picard_tol = picard_tol;
  d.solver = solver;
  return d;
}

fs::path ExperimentConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : workspace / p; }

void ExperimentConfig::validate() const {
  geometry.validate();
  (void)cells_per_side(1.0, epsilon);
  if (cell_n < 2 || macro_n < 1 || dns_elements_per_cell < 1) {
    bad("mesh sizes must be positive (cell_n >= 2)");
  }
  time().validate();
  if (table_points < 2) {
    bad("offline.points must be at least 2");
  }
  if (!(table_range.hi > table_range.lo)) {
    bad("offline.u_max must exceed offline.u_min");
  }
  validate_material(law, table_range);
  if (!(solver.tol > 0.0) || solver.max_iter < 1) {
    bad("solver.tol must be positive and solver.max_iter at least 1");
  }
  if (vtk_stride < 0) {
    bad("output.vtk_stride must be >= 0");
  }
  if (picard_max_iter < 1 || !(picard_tol > 0.0)) {
    bad("toggles.picard_max_iter must be >= 1 and toggles.picard_tol positive");
  }
  if (!fs::is_directory(workspace)) {
    throw Error(ErrorCode::io, "workspace " + workspace.string() + " is not a directory");
  }
}

ExperimentConfig parse_config(std::string_view text, const fs::path& workspace,
                              const std::vector<std::string>& overrides) {
  toml::table root = parse_toml(text, "config");
  for (const auto& o : overrides) {
    apply_override(root, o);
  }
  Reader r(root);
  ExperimentConfig c;
  c.workspace = workspace;
  std::string s;
  if (r.string("workspace", s)) {
    c.workspace = fs::path(s).is_absolute() ? fs::path(s) : workspace / s;
  }

  if (r.string("geometry.shape", s)) {
    c.geometry.shape = parse_inclusion_shape(s);
  }
  r.number("geometry.volume_fraction", c.geometry.volume_fraction);
  r.number("geometry.epsilon", c.epsilon);

  PhaseLaw matrix = c.law.at(Phase::matrix);
  PhaseLaw inclusion = c.law.at(Phase::inclusion);
  read_phase(r, "materials.matrix", matrix);
  read_phase(r, "materials.inclusion", inclusion);
  c.law.set(Phase::matrix, matrix);
  c.law.set(Phase::inclusion, inclusion);

  r.integer("discretization.cell_n", c.cell_n);
  r.integer("discretization.macro_n", c.macro_n);
  r.integer("discretization.dns_elements_per_cell", c.dns_elements_per_cell);

  r.number("time.final_time", c.final_time);
  r.integer("time.steps", c.steps);

  r.number("sources.heat", c.heat_source);
  r.number("sources.charge", c.charge_source);
  r.number("sources.boundary_temperature", c.boundary_temperature);
  r.number("sources.boundary_potential", c.boundary_potential);
  r.number("sources.initial_temperature", c.initial_temperature);

  r.number("offline.u_min", c.table_range.lo);
  r.number("offline.u_max", c.table_range.hi);
  r.integer("offline.points", c.table_points);
  if (r.string("offline.bc_mode", s)) {
    c.bc_mode = parse_cell_boundary_mode(s);
  }
  if (r.string("offline.table_dir", s)) {
    c.table_dir = s;
  }
  r.integer("offline.threads", c.threads);

  if (r.string("solver.method", s)) {
    c.solver.method = parse_solver_method(s);
  }
  r.number("solver.tol", c.solver.tol);
  r.integer("solver.max_iter", c.solver.max_iter);
  r.integer("solver.direct_limit", c.solver.direct_limit);

  if (r.string("output.dir", s)) {
    c.output_dir = s;
  }
  r.integer("output.vtk_stride", c.vtk_stride);

  r.boolean("toggles.chain_rule_terms", c.chain_rule_terms);
  if (r.string("toggles.linearization", s)) {
    c.linearization = parse_linearization(s);
  }
  r.integer("toggles.picard_max_iter", c.picard_max_iter);
  r.number("toggles.picard_tol", c.picard_tol);

  r.reject_unknown();
  return c;
}

ExperimentConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  const std::string text = read_text_file(file);
  fs::path dir = file.parent_path();
  if (dir.empty()) {
    dir = ".";
  }
  try {
    return parse_config(text, dir, overrides);
  } catch (const Error& e) {
    throw Error(e.code(), file.string() + ": " + e.what());
  }
}

std::string to_toml(const ExperimentConfig& c) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) { out += fmt::format("{} = {}\n", key, value); };
  auto num = [](double v) { return format_double(v); };
  auto str = [](std::string_view v) { return fmt::format("\"{}\"", v); };

  out += "[geometry]\n";
  line("shape", str(to_string(c.geometry.shape)));
  line("volume_fraction", num(c.geometry.volume_fraction));
  line("epsilon", num(c.epsilon));
  for (const auto phase : {Phase::matrix, Phase::inclusion}) {
    const PhaseLaw& law = c.law.at(phase);
    out += fmt::format("\n[materials.{}]\n", to_string(phase));
    line("rho", law_text(law.rho));
    line("c", law_text(law.c));
    line("k", law_text(law.k));
    line("sigma", law_text(law.sigma));
  }
  out += "\n[discretization]\n";
  line("cell_n", std::to_string(c.cell_n));
  line("macro_n", std::to_string(c.macro_n));
  line("dns_elements_per_cell", std::to_string(c.dns_elements_per_cell));
  out += "\n[time]\n";
  line("final_time", num(c.final_time));
  line("steps", std::to_string(c.steps));
  out += "\n[sources]\n";
  line("heat", num(c.heat_source));
  line("charge", num(c.charge_source));
  line("boundary_temperature", num(c.boundary_temperature));
  line("boundary_potential", num(c.boundary_potential));
  line("initial_temperature", num(c.initial_temperature));
  out += "\n[offline]\n";
  line("u_min", num(c.table_range.lo));
  line("u_max", num(c.table_range.hi));
  line("points", std::to_string(c.table_points));
  line("bc_mode", str(to_string(c.bc_mode)));
  line("table_dir", str(c.table_dir.generic_string()));
  line("threads", std::to_string(c.threads));
  out += "\n[solver]\n";
  const char* method = c.solver.method == SolverOptions::Method::cg       ? "cg"
                       : c.solver.method == SolverOptions::Method::direct ? "direct"
                                                                          : "auto";
  line("method", str(method));
  line("tol", num(c.solver.tol));
  line("max_iter", std::to_string(c.solver.max_iter));
  line("direct_limit", std::to_string(c.solver.direct_limit));
  out += "\n[output]\n";
  line("dir", str(c.output_dir.generic_string()));
  line("vtk_stride", std::to_string(c.vtk_stride));
  out += "\n[toggles]\n";
  line("chain_rule_terms", c.chain_rule_terms ? "true" : "false");
  line("linearization", str(to_string(c.linearization)));
  line("picard_max_iter", std::to_string(c.picard_max_iter));
  line("picard_tol", num(c.picard_tol));
  return out;
}

}  // namespace homs
