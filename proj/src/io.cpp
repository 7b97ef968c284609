#include "homs/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "homs/error.hpp"

namespace homs {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary table files assume a little-endian host");

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io, "sha256 digest failed");
  }
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += fmt::format("{:02x}", digest[i]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

void write_f64_file(const fs::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!out) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

std::vector<double> read_f64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % sizeof(double) != 0) {
    throw Error(ErrorCode::corrupt_table, path.string() + " is not a whole number of doubles");
  }
  std::vector<double> values(bytes.size() / sizeof(double));
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

fs::path staging_path(const fs::path& target) {
  auto name = target.filename().string();
  return target.parent_path() / fmt::format(".{}.staging-{}", name, ::getpid());
}

void replace_atomically(const fs::path& staged, const fs::path& target) {
  std::error_code ec;
  if (fs::is_directory(target) && fs::exists(target)) {
    const auto retired = target.parent_path() / fmt::format(".{}.retired-{}", target.filename().string(), ::getpid());
    fs::remove_all(retired, ec);
    fs::rename(target, retired, ec);
    if (ec) {
      throw Error(ErrorCode::io, "cannot move aside " + target.string() + ": " + ec.message());
    }
    fs::rename(staged, target, ec);
    if (ec) {
      fs::rename(retired, target);
      throw Error(ErrorCode::io, "cannot install " + target.string() + ": " + ec.message());
    }
    fs::remove_all(retired, ec);
    return;
  }
  fs::rename(staged, target, ec);
  if (ec) {
    throw Error(ErrorCode::io, "cannot install " + target.string() + ": " + ec.message());
  }
}

std::string format_double(double value) {
  return fmt::format("{:.17g}", value);
}

void write_csv(const fs::path& path, const CsvTable& table) {
  if (table.columns.size() != table.header.size()) {
    throw Error(ErrorCode::io, "csv header and column count differ");
  }
  const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
  for (const auto& c : table.columns) {
    if (c.size() != rows) {
      throw Error(ErrorCode::io, "csv columns have different lengths");
    }
  }
  std::string text;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    text += (j ? "," : "") + table.header[j];
  }
  text += '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      if (j) {
        text += ',';
      }
      text += format_double(table.columns[j][i]);
    }
    text += '\n';
  }
  if (!path.parent_path().empty()) {
    fs::create_directories(path.parent_path());
  }
  const auto staged = staging_path(path);
  write_text_file(staged, text);
  replace_atomically(staged, path);
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::io, path.string() + " is empty");
  }
  {
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      table.header.push_back(cell);
    }
  }
  table.columns.assign(table.header.size(), {});
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(row, cell, ',')) {
      if (j >= table.columns.size()) {
        throw Error(ErrorCode::io, "csv row wider than header in " + path.string());
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw Error(ErrorCode::io, "bad csv number '" + cell + "' in " + path.string());
      }
      table.columns[j++].push_back(v);
    }
    if (j != table.columns.size()) {
      throw Error(ErrorCode::io, "short csv row in " + path.string());
    }
  }
  return table;
}

void write_vtk(const fs::path& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, const Vector*>>& fields) {
  std::string text = "# vtk DataFile Version 3.0\nhoms\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  text += fmt::format("POINTS {} double\n", mesh.node_count());
  for (const auto& p : mesh.nodes()) {
    text += fmt::format("{} {} 0\n", format_double(p.x()), format_double(p.y()));
  }
  text += fmt::format("CELLS {} {}\n", mesh.element_count(), 4 * mesh.element_count());
  for (const auto& e : mesh.elements()) {
    text += fmt::format("3 {} {} {}\n", e[0], e[1], e[2]);
  }
  text += fmt::format("CELL_TYPES {}\n", mesh.element_count());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    text += "5\n";
  }
  text += fmt::format("CELL_DATA {}\nSCALARS element_phase int 1\nLOOKUP_TABLE default\n", mesh.element_count());
  for (const auto ph : mesh.element_phase()) {
    text += fmt::format("{}\n", static_cast<int>(ph));
  }
  if (!fields.empty()) {
    text += fmt::format("POINT_DATA {}\n", mesh.node_count());
    for (const auto& [name, values] : fields) {
      if (static_cast<std::size_t>(values->size()) != mesh.node_count()) {
        throw Error(ErrorCode::provenance, "vtk field '" + name + "' does not match the mesh");
      }
      text += fmt::format("SCALARS {} double 1\nLOOKUP_TABLE default\n", name);
      for (Eigen::Index i = 0; i < values->size(); ++i) {
        text += format_double((*values)[i]) + '\n';
      }
    }
  }
  if (!path.parent_path().empty()) {
    fs::create_directories(path.parent_path());
  }
  const auto staged = staging_path(path);
  write_text_file(staged, text);
  replace_atomically(staged, path);
}

}  // namespace homs
