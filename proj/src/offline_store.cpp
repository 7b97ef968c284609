#include "homs/offline_store.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "homs/error.hpp"
#include "homs/homogenizer.hpp"
#include "homs/io.hpp"

namespace homs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "homs-offline-table";
constexpr int kVersion = 1;
constexpr int kCoefficientsPerEntry = 14;

void append_bytes(std::vector<unsigned char>& buffer, const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  buffer.insert(buffer.end(), p, p + size);
}

int resolve_threads(int requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("HOMS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) {
      return n;
    }
  }
  return 1;
}

/// Runs task(i) for i in [0, count); rethrows the failure with the lowest index.
template <typename Task>
void for_each_index(int count, int threads, Task task) {
  std::vector<std::exception_ptr> failures(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(threads, 1, std::max(count, 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) {
      pool.emplace_back(worker);
    }
  }
  for (const auto& f : failures) {
    if (f) {
      std::rethrow_exception(f);
    }
  }
}

template <typename Task>
auto at_temperature(double u0, Task task) {
  try {
    return task();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("at representative temperature {}: {}", u0, e.what()));
  }
}

void warn_clamped(double u0, double lo, double hi) {
  static std::atomic<long> count{0};
  const long c = count++;
  if (c < 5 || c % 100000 == 0) {
    spdlog::warn("temperature {} outside offline table range [{}, {}]; clamped ({} so far)", u0, lo, hi, c + 1);
  }
}

Vector weighted(const Vector& a, double wa, const Vector& b, double wb) {
  if (a.size() == 0 && b.size() == 0) {
    return {};
  }
  if (a.size() != b.size()) {
    throw Error(ErrorCode::invalid_table, "blending fields of different lengths");
  }
  return wa * a + wb * b;
}

HomogenizedCoefficients weighted(const HomogenizedCoefficients& a, double wa, const HomogenizedCoefficients& b,
                                 double wb) {
  HomogenizedCoefficients out;
  out.u0 = wa * a.u0 + wb * b.u0;
  out.S_hat = wa * a.S_hat + wb * b.S_hat;
  out.k_hat = wa * a.k_hat + wb * b.k_hat;
  out.sigma_hat = wa * a.sigma_hat + wb * b.sigma_hat;
  out.sigma_hat_star = wa * a.sigma_hat_star + wb * b.sigma_hat_star;
  return out;
}

CellFunctionSet weighted(const CellFunctionSet& a, double wa, const CellFunctionSet& b, double wb) {
  if (!(a.mesh_id == b.mesh_id)) {
    throw Error(ErrorCode::provenance, "blending cell functions from different meshes");
  }
  CellFunctionSet out;
  out.mesh_id = a.mesh_id;
  out.u0 = wa * a.u0 + wb * b.u0;
  const auto fa = a.fields();
  const auto fb = b.fields();
  auto fo = out.fields();
  for (std::size_t i = 0; i < fo.size(); ++i) {
    *fo[i].second = weighted(*fa[i].second, wa, *fb[i].second, wb);
  }
  return out;
}

/// Derivative entry at knot s.
OfflineEntry knot_derivative(const OfflineTable& table, int s, TableSection section) {
  const int n = static_cast<int>(table.temperatures.size());
  const int lo = s == 0 ? 0 : s - 1;
  const int hi = s == n - 1 ? n - 1 : s + 1;
  const double inv = 1.0 / (table.temperatures[hi] - table.temperatures[lo]);
  const auto& a = table.entries[lo];
  const auto& b = table.entries[hi];
  OfflineEntry d;
  if (section != TableSection::cell_functions) {
    d.homog = weighted(b.homog, inv, a.homog, -inv);
  }
  if (section != TableSection::homogenized) {
    d.cells = weighted(b.cells, inv, a.cells, -inv);
  }
  d.homog.u0 = table.temperatures[s];
  d.cells.u0 = table.temperatures[s];
  return d;
}

json coefficient_layout() {
  return json::array({"u0", "S_hat", "k_hat_11", "k_hat_21", "k_hat_12", "k_hat_22", "sigma_hat_11", "sigma_hat_21",
                      "sigma_hat_12", "sigma_hat_22", "sigma_hat_star_11", "sigma_hat_star_21", "sigma_hat_star_12",
                      "sigma_hat_star_22"});
}

void pack(const HomogenizedCoefficients& h, std::vector<double>& out) {
  out.push_back(h.u0);
  out.push_back(h.S_hat);
  for (const Mat2* m : {&h.k_hat, &h.sigma_hat, &h.sigma_hat_star}) {
    out.insert(out.end(), m->data(), m->data() + 4);
  }
}

HomogenizedCoefficients unpack(const double* p) {
  HomogenizedCoefficients h;
  h.u0 = p[0];
  h.S_hat = p[1];
  std::copy(p + 2, p + 6, h.k_hat.data());
  std::copy(p + 6, p + 10, h.sigma_hat.data());
  std::copy(p + 10, p + 14, h.sigma_hat_star.data());
  return h;
}

std::string file_digest(std::span<const double> values) {
  return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(values.data()), values.size_bytes()));
}

[[noreturn]] void corrupt(const fs::path& dir, const std::string& why) {
  throw Error(ErrorCode::corrupt_table, dir.string() + ": " + why);
}

}  // namespace

Mesh CellMeshSpec::build() const {
  geometry.validate();
  return assign_phases(build_structured_mesh(Rect::unit(), n), geometry);
}

void OfflineTable::validate() const {
  const std::size_t n = temperatures.size();
  if (n < 2) {
    throw Error(ErrorCode::invalid_table, "a table needs at least two temperatures");
  }
  if (entries.size() != n) {
    throw Error(ErrorCode::invalid_table, "entry count differs from temperature count");
  }
  const double h = spacing();
  if (!(h > 0.0)) {
    throw Error(ErrorCode::invalid_table, "temperatures must increase");
  }
  for (std::size_t s = 0; s + 1 < n; ++s) {
    if (std::abs((temperatures[s + 1] - temperatures[s]) - h) > 1e-12 * h * static_cast<double>(n)) {
      throw Error(ErrorCode::invalid_table, "temperatures are not equidistant");
    }
  }
  if (!cell_mesh) {
    throw Error(ErrorCode::invalid_table, "table has no cell mesh");
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (!(entries[s].cells.mesh_id == cell_mesh->id())) {
      throw Error(ErrorCode::invalid_table, "entry built on a different cell mesh");
    }
  }
}

double OfflineTable::spacing() const {
  if (temperatures.size() < 2) {
    return 0.0;
  }
  return (temperatures.back() - temperatures.front()) / static_cast<double>(temperatures.size() - 1);
}

std::string mesh_fingerprint(const Mesh& mesh) {
  std::vector<unsigned char> bytes;
  const std::uint64_t counts[2] = {mesh.node_count(), mesh.element_count()};
  append_bytes(bytes, counts, sizeof(counts));
  for (const auto& p : mesh.nodes()) {
    const double xy[2] = {p.x(), p.y()};
    append_bytes(bytes, xy, sizeof(xy));
  }
  for (const auto& e : mesh.elements()) {
    const std::int32_t tri[3] = {e[0], e[1], e[2]};
    append_bytes(bytes, tri, sizeof(tri));
  }
  for (const auto ph : mesh.element_phase()) {
    const auto b = static_cast<unsigned char>(ph);
    append_bytes(bytes, &b, 1);
  }
  return sha256_hex(bytes);
}

std::string law_fingerprint(const MaterialLaw& law) {
  return sha256_hex(law.canonical());
}

OfflineTable build_table(const CellMeshSpec& cell, const MaterialLaw& law, TemperatureRange range, int n_points,
                         CellBoundaryMode mode, const TableBuildOptions& options) {
  if (n_points < 2) {
    throw Error(ErrorCode::invalid_table, "n_points must be at least 2");
  }
  if (!(range.hi > range.lo)) {
    throw Error(ErrorCode::invalid_config, "temperature range must have hi > lo");
  }
  static_cast<void>(ellipticity_bounds(law, range));

  OfflineTable table;
  table.cell_spec = cell;
  table.cell_mesh = std::make_shared<const Mesh>(cell.build());
  table.cell_mesh_fingerprint = mesh_fingerprint(*table.cell_mesh);
  table.law_fingerprint = law_fingerprint(law);
  table.bc_mode = mode;
  table.chain_rule_terms = options.second_order.chain_rule_terms;
  table.temperatures.resize(n_points);
  for (int s = 0; s < n_points; ++s) {
    table.temperatures[s] = range.lo + (range.hi - range.lo) * static_cast<double>(s) / (n_points - 1);
  }
  table.temperatures.back() = range.hi;

  const Mesh& mesh = *table.cell_mesh;
  const int threads = resolve_threads(options.threads);
  std::vector<std::unique_ptr<CellOperators>> ops(n_points);
  std::vector<FirstOrderFields> first(n_points);
  std::vector<HomogenizedCoefficients> homog(n_points);
  for_each_index(n_points, threads, [&](int s) {
    const double u0 = table.temperatures[s];
    at_temperature(u0, [&] {
      ops[s] = std::make_unique<CellOperators>(mesh, law, u0, mode, options.solver);
      first[s] = solve_first_order(*ops[s]);
      homog[s] = compute_homogenized(mesh, law, u0, first[s]);
      return 0;
    });
  });

  table.entries.resize(n_points);
  for_each_index(n_points, threads, [&](int s) {
    const int lo = s == 0 ? 0 : s - 1;
    const int hi = s == n_points - 1 ? n_points - 1 : s + 1;
    const double inv = 1.0 / (table.temperatures[hi] - table.temperatures[lo]);
    FirstOrderDerivatives d1;
    for (int a = 0; a < 2; ++a) {
      d1.dM[a] = inv * (first[hi].M[a] - first[lo].M[a]);
      d1.dN[a] = inv * (first[hi].N[a] - first[lo].N[a]);
    }
    at_temperature(table.temperatures[s], [&] {
      table.entries[s].cells = solve_second_order(*ops[s], first[s], homog[s], d1, options.second_order);
      table.entries[s].homog = homog[s];
      return 0;
    });
  });
  table.validate();
  return table;
}

Bracket bracket(const OfflineTable& table, double u0) {
  const auto& t = table.temperatures;
  if (t.size() < 2 || table.entries.size() != t.size()) {
    throw Error(ErrorCode::invalid_table, "interpolation needs a table with at least two entries");
  }
  if (!std::isfinite(u0)) {
    throw Error(ErrorCode::interpolation, "non-finite temperature");
  }
  const int n = static_cast<int>(t.size());
  Bracket b;
  if (u0 < t.front() || u0 > t.back()) {
    // Roundoff at the range ends (e.g. a Dirichlet value reproduced by a solve) is not a clamp.
    const double slack = 1e-9 * std::max(std::abs(t.front()), std::abs(t.back()));
    if (u0 < t.front() - slack || u0 > t.back() + slack) {
      warn_clamped(u0, t.front(), t.back());
      b.clamped = true;
    }
    u0 = std::clamp(u0, t.front(), t.back());
  }
  int s = static_cast<int>(std::floor((u0 - t.front()) / table.spacing()));
  s = std::clamp(s, 0, n - 2);
  while (s < n - 2 && u0 >= t[s + 1]) {
    ++s;
  }
  while (s > 0 && u0 < t[s]) {
    --s;
  }
  b.lo = s;
  b.hi = s + 1;
  b.weight = (u0 - t[s]) / (t[s + 1] - t[s]);
  return b;
}

HomogenizedCoefficients interpolate_homogenized(const OfflineTable& table, double u0) {
  const Bracket b = bracket(table, u0);
  auto h = weighted(table.entries[b.lo].homog, 1.0 - b.weight, table.entries[b.hi].homog, b.weight);
  h.u0 = u0;
  return h;
}

OfflineEntry interpolate(const OfflineTable& table, double u0) {
  const Bracket b = bracket(table, u0);
  auto e = blend(table.entries[b.lo], 1.0 - b.weight, table.entries[b.hi], b.weight);
  e.homog.u0 = u0;
  e.cells.u0 = u0;
  return e;
}

OfflineEntry d_du(const OfflineTable& table, double u0, TableSection section) {
  const Bracket b = bracket(table, u0);
  const auto lo = knot_derivative(table, b.lo, section);
  const auto hi = knot_derivative(table, b.hi, section);
  OfflineEntry d;
  if (section != TableSection::cell_functions) {
    d.homog = weighted(lo.homog, 1.0 - b.weight, hi.homog, b.weight);
  }
  if (section != TableSection::homogenized) {
    d.cells = weighted(lo.cells, 1.0 - b.weight, hi.cells, b.weight);
  }
  d.homog.u0 = u0;
  d.cells.u0 = u0;
  return d;
}

OfflineEntry blend(const OfflineEntry& a, double wa, const OfflineEntry& b, double wb) {
  return OfflineEntry{weighted(a.cells, wa, b.cells, wb), weighted(a.homog, wa, b.homog, wb)};
}

void save_table(const OfflineTable& table, const fs::path& dir) {
  table.validate();
  const fs::path staged = staging_path(dir);
  fs::remove_all(staged);
  fs::create_directories(staged / "fields");

  json files = json::array();
  auto store = [&](const std::string& rel, std::span<const double> values) {
    write_f64_file(staged / rel, values);
    files.push_back({{"path", rel}, {"count", values.size()}, {"sha256", file_digest(values)}});
  };

  std::vector<double> coefficients;
  for (const auto& e : table.entries) {
    pack(e.homog, coefficients);
  }
  store("coefficients.f64", coefficients);

  json names = json::array();
  for (const auto& [name, v] : table.entries.front().cells.fields()) {
    names.push_back(name);
  }
  for (std::size_t s = 0; s < table.entries.size(); ++s) {
    for (const auto& [name, v] : table.entries[s].cells.fields()) {
      store(fmt::format("fields/{:03}_{}.f64", s, name), std::span<const double>(v->data(), v->size()));
    }
  }

  const json manifest = {
      {"format", kFormat},
      {"version", kVersion},
      {"temperatures", table.temperatures},
      {"bc_mode", std::string(to_string(table.bc_mode))},
      {"chain_rule_terms", table.chain_rule_terms},
      {"cell_mesh",
       {{"n", table.cell_spec.n},
        {"shape", std::string(to_string(table.cell_spec.geometry.shape))},
        {"volume_fraction", table.cell_spec.geometry.volume_fraction},
        {"nodes", table.cell_mesh->node_count()},
        {"elements", table.cell_mesh->element_count()}}},
      {"cell_mesh_fingerprint", table.cell_mesh_fingerprint},
      {"law_fingerprint", table.law_fingerprint},
      {"coefficient_layout", coefficient_layout()},
      {"fields", names},
      {"files", files},
  };
  write_text_file(staged / "manifest.json", manifest.dump(2) + "\n");
  replace_atomically(staged, dir);
}

OfflineTable load_table(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::io, "no offline table at " + dir.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    corrupt(dir, std::string("unreadable manifest: ") + e.what());
  } catch (const Error& e) {
    corrupt(dir, e.what());
  }

  OfflineTable table;
  std::vector<std::string> names;
  json files;
  try {
    if (manifest.at("format") != kFormat || manifest.at("version") != kVersion) {
      corrupt(dir, "unknown table format");
    }
    table.temperatures = manifest.at("temperatures").get<std::vector<double>>();
    table.bc_mode = parse_cell_boundary_mode(manifest.at("bc_mode").get<std::string>());
    table.chain_rule_terms = manifest.at("chain_rule_terms").get<bool>();
    const auto& cm = manifest.at("cell_mesh");
    table.cell_spec.n = cm.at("n").get<int>();
    table.cell_spec.geometry.shape = parse_inclusion_shape(cm.at("shape").get<std::string>());
    table.cell_spec.geometry.volume_fraction = cm.at("volume_fraction").get<double>();
    table.cell_mesh_fingerprint = manifest.at("cell_mesh_fingerprint").get<std::string>();
    table.law_fingerprint = manifest.at("law_fingerprint").get<std::string>();
    names = manifest.at("fields").get<std::vector<std::string>>();
    files = manifest.at("files");
  } catch (const json::exception& e) {
    corrupt(dir, std::string("malformed manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::corrupt_table) {
      throw;
    }
    corrupt(dir, e.what());
  }

  try {
    table.cell_mesh = std::make_shared<const Mesh>(table.cell_spec.build());
  } catch (const Error& e) {
    corrupt(dir, e.what());
  }
  if (mesh_fingerprint(*table.cell_mesh) != table.cell_mesh_fingerprint) {
    corrupt(dir, "cell mesh description does not reproduce the recorded fingerprint");
  }

  const std::size_t n = table.temperatures.size();
  const CellFunctionSet layout;
  const auto expected = layout.fields();
  if (names.size() != expected.size()) {
    corrupt(dir, "unexpected field list");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] != expected[i].first) {
      corrupt(dir, "unexpected field '" + names[i] + "'");
    }
  }
  if (files.size() != 1 + n * names.size()) {
    corrupt(dir, "file list does not match the table shape");
  }

  auto fetch = [&](std::size_t index, const std::string& rel, std::size_t count) {
    const auto& f = files[index];
    if (f.value("path", "") != rel || f.value("count", std::size_t{0}) != count) {
      corrupt(dir, "file list entry " + std::to_string(index) + " does not match " + rel);
    }
    std::vector<double> values;
    try {
      values = read_f64_file(dir / rel);
    } catch (const Error& e) {
      corrupt(dir, e.what());
    }
    if (values.size() != count) {
      corrupt(dir, fmt::format("{} holds {} values, expected {}", rel, values.size(), count));
    }
    if (file_digest(values) != f.value("sha256", "")) {
      corrupt(dir, rel + " fails its checksum");
    }
    return values;
  };

  const auto coefficients = fetch(0, "coefficients.f64", kCoefficientsPerEntry * n);
  const std::size_t nodes = table.cell_mesh->node_count();
  table.entries.resize(n);
  std::size_t index = 1;
  for (std::size_t s = 0; s < n; ++s) {
    auto& e = table.entries[s];
    e.homog = unpack(coefficients.data() + kCoefficientsPerEntry * s);
    e.cells.u0 = table.temperatures[s];
    e.cells.mesh_id = table.cell_mesh->id();
    for (auto& [name, v] : e.cells.fields()) {
      const auto values = fetch(index++, fmt::format("fields/{:03}_{}.f64", s, name), nodes);
      *v = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
    if (e.homog.u0 != table.temperatures[s]) {
      corrupt(dir, "coefficient temperatures disagree with the manifest");
    }
  }
  try {
    table.validate();
  } catch (const Error& e) {
    corrupt(dir, e.what());
  }
  return table;
}

void require_fresh(const OfflineTable& table, const TableKey& key) {
  auto stale = [](const std::string& why) { throw Error(ErrorCode::stale_table, why); };
  if (table.law_fingerprint != law_fingerprint(key.law)) {
    stale("material law fingerprint differs");
  }
  if (table.cell_mesh_fingerprint != mesh_fingerprint(key.cell.build())) {
    stale("cell mesh fingerprint differs");
  }
  if (table.bc_mode != key.mode) {
    stale("cell boundary mode differs");
  }
  if (table.chain_rule_terms != key.chain_rule_terms) {
    stale("chain-rule toggle differs");
  }
  if (key.n_points > 0) {
    if (static_cast<int>(table.temperatures.size()) != key.n_points || table.temperatures.front() != key.range.lo ||
        table.temperatures.back() != key.range.hi) {
      stale("temperature grid differs");
    }
  }
}

OfflineTable load_table(const fs::path& dir, const TableKey& key) {
  auto table = load_table(dir);
  require_fresh(table, key);
  return table;
}

}  // namespace homs
