#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "homs/fem.hpp"
#include "homs/mesh.hpp"

namespace homs {

/// 64 lowercase hex digits.
[[nodiscard]] std::string sha256_hex(std::span<const unsigned char> bytes);
[[nodiscard]] std::string sha256_hex(std::string_view text);

/// Raw little-endian 64-bit floats, no header.
void write_f64_file(const std::filesystem::path& path, std::span<const double> values);
[[nodiscard]] std::vector<double> read_f64_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Replaces `target` (file or directory) with `staged` so readers never see a
/// half-written result.
void replace_atomically(const std::filesystem::path& staged, const std::filesystem::path& target);

/// Sibling path for staging a write to `target`.
[[nodiscard]] std::filesystem::path staging_path(const std::filesystem::path& target);

/// 17 significant digits, enough to read back the same double.
[[nodiscard]] std::string format_double(double value);

/// Columns of equal length written with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// Legacy-format VTK unstructured grid with nodal scalar fields.
void write_vtk(const std::filesystem::path& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, const Vector*>>& fields);

}  // namespace homs
