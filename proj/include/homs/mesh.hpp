#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace homs {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Constituent label carried by every element.
enum class Phase : std::uint8_t { matrix = 0, inclusion = 1 };
inline constexpr std::size_t kPhaseCount = 2;

[[nodiscard]] std::string_view to_string(Phase phase);

/// Boundary side flags. A corner node carries two flags.
enum class BoundaryTag : std::uint8_t {
  none = 0,
  left = 1,
  right = 2,
  bottom = 4,
  top = 8,
  all = 15,
};

[[nodiscard]] constexpr BoundaryTag operator|(BoundaryTag a, BoundaryTag b) {
  return static_cast<BoundaryTag>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
[[nodiscard]] constexpr bool intersects(BoundaryTag a, BoundaryTag b) {
  return (static_cast<std::uint8_t>(a) & static_cast<std::uint8_t>(b)) != 0;
}

/// Parses "left", "right", "bottom", "top", "all" or a '+'-joined combination.
[[nodiscard]] BoundaryTag parse_boundary_tag(std::string_view text);
[[nodiscard]] std::string to_string(BoundaryTag tag);

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  [[nodiscard]] double width() const { return x1 - x0; }
  [[nodiscard]] double height() const { return y1 - y0; }
  [[nodiscard]] double area() const { return width() * height(); }

  [[nodiscard]] static Rect unit() { return {}; }
};

/// Cached per-element data: area, constant P1 basis gradients and centroid.
struct ElementGeometry {
  double area = 0.0;
  std::array<Vec2, 3> grad;
  Vec2 centroid;
};

struct PointLocation {
  int element = -1;
  std::array<double, 3> bary{};
};

/// Content hash of node coordinates and connectivity; tags fields with their mesh.
struct MeshId {
  std::uint64_t value = 0;
  friend bool operator==(MeshId, MeshId) = default;
};

/// P1 triangle mesh. Immutable after construction.
class Mesh {
 public:
  struct Structured {
    Rect domain;
    int nx = 0;
    int ny = 0;
  };

  Mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> elements,
       std::vector<BoundaryTag> node_markers, std::vector<Phase> element_phase,
       std::optional<Structured> structured = std::nullopt);

  [[nodiscard]] const std::vector<Vec2>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  [[nodiscard]] const std::vector<Phase>& element_phase() const { return element_phase_; }
  [[nodiscard]] const std::vector<ElementGeometry>& geometry() const { return geometry_; }
  [[nodiscard]] const std::optional<Structured>& structured() const { return structured_; }

  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] std::size_t element_count() const { return elements_.size(); }
  [[nodiscard]] BoundaryTag boundary_marker(int node) const { return markers_[node]; }
  [[nodiscard]] const std::vector<BoundaryTag>& boundary_markers() const { return markers_; }
  [[nodiscard]] MeshId id() const { return id_; }
  [[nodiscard]] double total_area() const;

  /// Finds the element containing p and its barycentric coordinates.
  /// Throws ErrorCode::interpolation when p lies outside the mesh.
  [[nodiscard]] PointLocation locate(const Vec2& p) const;

  /// Evaluates a nodal P1 field at p.
  [[nodiscard]] double evaluate(const Eigen::VectorXd& field, const Vec2& p) const;

  [[nodiscard]] Mesh with_phases(std::vector<Phase> phases) const;

 private:
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<BoundaryTag> markers_;
  std::vector<Phase> element_phase_;
  std::optional<Structured> structured_;
  std::vector<ElementGeometry> geometry_;
  MeshId id_;
};

/// Uniform (n+1)^2 node grid with every square split into two triangles.
/// Diagonals alternate in a checkerboard so the mesh is mirror symmetric
/// about both midlines whenever n is even.
[[nodiscard]] Mesh build_structured_mesh(const Rect& domain, int n);

struct InclusionSpec {
  enum class Shape { centered_square, centered_disk, laminate_x1 };

  Shape shape = Shape::centered_square;
  double volume_fraction = 0.25;

  /// Phase of a point given in cell coordinates y in [0,1)^2.
  [[nodiscard]] Phase phase_at(const Vec2& y) const;
  void validate() const;
};

[[nodiscard]] InclusionSpec::Shape parse_inclusion_shape(std::string_view text);
[[nodiscard]] std::string_view to_string(InclusionSpec::Shape shape);

/// Maps x to the cell coordinate y = frac(x / epsilon), component-wise.
/// Values within 1e-9 of an integer snap to it, so cell faces map to 0.
[[nodiscard]] Vec2 micro_coords(const Vec2& x, double epsilon);

/// Labels each element by the phase at its centroid. With `epsilon` the
/// centroid is first folded into the unit cell; the domain must be tiled by
/// a whole number of cells per side.
[[nodiscard]] Mesh assign_phases(const Mesh& mesh, const InclusionSpec& geometry,
                                 std::optional<double> epsilon = std::nullopt);

/// Sorted node indices carrying any of the requested side flags.
[[nodiscard]] std::vector<int> boundary_nodes(const Mesh& mesh, BoundaryTag tag);

/// Number of cells per side when `epsilon` tiles `length`; throws otherwise.
[[nodiscard]] int cells_per_side(double length, double epsilon);

}  // namespace homs
