#include "homs/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "homs/error.hpp"

namespace homs {

namespace {

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

ElementGeometry make_geometry(const Vec2& a, const Vec2& b, const Vec2& c) {
  ElementGeometry g;
  const double twice_area = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  g.area = 0.5 * twice_area;
  // grad(phi_k) = rot90(opposite edge) / (2 area)
  g.grad[0] = Vec2(b.y() - c.y(), c.x() - b.x()) / twice_area;
  g.grad[1] = Vec2(c.y() - a.y(), a.x() - c.x()) / twice_area;
  g.grad[2] = Vec2(a.y() - b.y(), b.x() - a.x()) / twice_area;
  g.centroid = (a + b + c) / 3.0;
  return g;
}

double snapped_fraction(double t) {
  const double r = std::round(t);
  if (std::abs(t - r) < 1e-9) {
    return 0.0;
  }
  return t - std::floor(t);
}

}  // namespace

std::string_view to_string(Phase phase) {
  return phase == Phase::matrix ? "matrix" : "inclusion";
}

BoundaryTag parse_boundary_tag(std::string_view text) {
  BoundaryTag tag = BoundaryTag::none;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('+', start), text.size());
    const std::string_view part = text.substr(start, end - start);
    if (part == "left") {
      tag = tag | BoundaryTag::left;
    } else if (part == "right") {
      tag = tag | BoundaryTag::right;
    } else if (part == "bottom") {
      tag = tag | BoundaryTag::bottom;
    } else if (part == "top") {
      tag = tag | BoundaryTag::top;
    } else if (part == "all") {
      tag = tag | BoundaryTag::all;
    } else if (part == "none" && text == "none") {
      return BoundaryTag::none;
    } else {
      throw Error(ErrorCode::unknown_marker, "unknown boundary tag '" + std::string(part) + "'");
    }
    start = end + 1;
  }
  return tag;
}

std::string to_string(BoundaryTag tag) {
  if (tag == BoundaryTag::none) {
    return "none";
  }
  if (tag == BoundaryTag::all) {
    return "all";
  }
  std::string out;
  const std::pair<BoundaryTag, const char*> names[] = {{BoundaryTag::left, "left"},
                                                       {BoundaryTag::right, "right"},
                                                       {BoundaryTag::bottom, "bottom"},
                                                       {BoundaryTag::top, "top"}};
  for (const auto& [flag, name] : names) {
    if (intersects(tag, flag)) {
      if (!out.empty()) {
        out += '+';
      }
      out += name;
    }
  }
  return out;
}

Mesh::Mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> elements,
           std::vector<BoundaryTag> node_markers, std::vector<Phase> element_phase,
           std::optional<Structured> structured)
    : nodes_(std::move(nodes)),
      elements_(std::move(elements)),
      markers_(std::move(node_markers)),
      element_phase_(std::move(element_phase)),
      structured_(structured) {
  if (markers_.size() != nodes_.size()) {
    throw Error(ErrorCode::invalid_discretization, "boundary marker count differs from node count");
  }
  if (element_phase_.size() != elements_.size()) {
    throw Error(ErrorCode::invalid_discretization, "element_phase length differs from element count");
  }
  geometry_.reserve(elements_.size());
  const int n_nodes = static_cast<int>(nodes_.size());
  for (const auto& tri : elements_) {
    for (int v : tri) {
      if (v < 0 || v >= n_nodes) {
        throw Error(ErrorCode::invalid_discretization, "element references a missing node");
      }
    }
    geometry_.push_back(make_geometry(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]));
    if (!(geometry_.back().area > 0.0)) {
      throw Error(ErrorCode::invalid_discretization, "element with nonpositive signed area");
    }
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : nodes_) {
    h = fnv1a(h, p.data(), 2 * sizeof(double));
  }
  for (const auto& tri : elements_) {
    h = fnv1a(h, tri.data(), sizeof(tri));
  }
  id_ = MeshId{h};
}

double Mesh::total_area() const {
  double a = 0.0;
  for (const auto& g : geometry_) {
    a += g.area;
  }
  return a;
}

PointLocation Mesh::locate(const Vec2& p) const {
  auto barycentric = [&](int e) {
    const auto& g = geometry_[e];
    PointLocation loc;
    loc.element = e;
    for (int k = 0; k < 3; ++k) {
      loc.bary[k] = 1.0 / 3.0 + g.grad[k].dot(p - g.centroid);
    }
    return loc;
  };

  if (structured_) {
    const auto& s = *structured_;
    const double tol = 1e-10;
    const double sx = (p.x() - s.domain.x0) / s.domain.width() * s.nx;
    const double sy = (p.y() - s.domain.y0) / s.domain.height() * s.ny;
    if (sx < -tol * s.nx || sx > s.nx * (1.0 + tol) || sy < -tol * s.ny || sy > s.ny * (1.0 + tol)) {
      throw Error(ErrorCode::interpolation, "point outside mesh");
    }
    const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, s.nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, s.ny - 1);
    const double ls = sx - i;
    const double lt = sy - j;
    const int square = i + j * s.nx;
    int e = 2 * square;
    if ((i + j) % 2 == 0) {
      e += (lt > ls) ? 1 : 0;
    } else {
      e += (ls + lt > 1.0) ? 1 : 0;
    }
    return barycentric(e);
  }

  for (int e = 0; e < static_cast<int>(elements_.size()); ++e) {
    auto loc = barycentric(e);
    if (*std::min_element(loc.bary.begin(), loc.bary.end()) >= -1e-12) {
      return loc;
    }
  }
  throw Error(ErrorCode::interpolation, "point outside mesh");
}

double Mesh::evaluate(const Eigen::VectorXd& field, const Vec2& p) const {
  const auto loc = locate(p);
  const auto& tri = elements_[loc.element];
  return loc.bary[0] * field[tri[0]] + loc.bary[1] * field[tri[1]] + loc.bary[2] * field[tri[2]];
}

Mesh Mesh::with_phases(std::vector<Phase> phases) const {
  return Mesh(nodes_, elements_, markers_, std::move(phases), structured_);
}

Mesh build_structured_mesh(const Rect& domain, int n) {
  if (n < 1) {
    throw Error(ErrorCode::invalid_discretization, "need at least one subdivision per side");
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw Error(ErrorCode::invalid_discretization, "degenerate domain");
  }
  const int stride = n + 1;
  std::vector<Vec2> nodes;
  std::vector<BoundaryTag> markers;
  nodes.reserve(static_cast<std::size_t>(stride) * stride);
  markers.reserve(nodes.capacity());
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      nodes.emplace_back(domain.x0 + domain.width() * i / n, domain.y0 + domain.height() * j / n);
      BoundaryTag tag = BoundaryTag::none;
      if (i == 0) tag = tag | BoundaryTag::left;
      if (i == n) tag = tag | BoundaryTag::right;
      if (j == 0) tag = tag | BoundaryTag::bottom;
      if (j == n) tag = tag | BoundaryTag::top;
      markers.push_back(tag);
    }
  }
  std::vector<std::array<int, 3>> elements;
  elements.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = i + j * stride;
      const int v10 = v00 + 1;
      const int v01 = v00 + stride;
      const int v11 = v01 + 1;
      if ((i + j) % 2 == 0) {
        elements.push_back({v00, v10, v11});
        elements.push_back({v00, v11, v01});
      } else {
        elements.push_back({v00, v10, v01});
        elements.push_back({v10, v11, v01});
      }
    }
  }
  std::vector<Phase> phases(elements.size(), Phase::matrix);
  return Mesh(std::move(nodes), std::move(elements), std::move(markers), std::move(phases),
              Mesh::Structured{domain, n, n});
}

void InclusionSpec::validate() const {
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_config, "inclusion volume fraction must lie in (0,1)");
  }
  if (shape == Shape::centered_disk && volume_fraction > std::numbers::pi / 4.0) {
    throw Error(ErrorCode::invalid_config, "centered disk cannot exceed pi/4 volume fraction");
  }
}

Phase InclusionSpec::phase_at(const Vec2& y) const {
  const double dx = y.x() - 0.5;
  const double dy = y.y() - 0.5;
  switch (shape) {
    case Shape::centered_square: {
      const double half = 0.5 * std::sqrt(volume_fraction);
      return (std::abs(dx) < half && std::abs(dy) < half) ? Phase::inclusion : Phase::matrix;
    }
    case Shape::centered_disk: {
      const double r2 = volume_fraction / std::numbers::pi;
      return (dx * dx + dy * dy < r2) ? Phase::inclusion : Phase::matrix;
    }
    case Shape::laminate_x1:
      return std::abs(dx) < 0.5 * volume_fraction ? Phase::inclusion : Phase::matrix;
  }
  return Phase::matrix;
}

InclusionSpec::Shape parse_inclusion_shape(std::string_view text) {
  if (text == "centered_square") return InclusionSpec::Shape::centered_square;
  if (text == "centered_disk") return InclusionSpec::Shape::centered_disk;
  if (text == "laminate_x1") return InclusionSpec::Shape::laminate_x1;
  throw Error(ErrorCode::invalid_config, "unknown inclusion shape '" + std::string(text) + "'");
}

std::string_view to_string(InclusionSpec::Shape shape) {
  switch (shape) {
    case InclusionSpec::Shape::centered_square: return "centered_square";
    case InclusionSpec::Shape::centered_disk: return "centered_disk";
    case InclusionSpec::Shape::laminate_x1: return "laminate_x1";
  }
  return "unknown";
}

Vec2 micro_coords(const Vec2& x, double epsilon) {
  return {snapped_fraction(x.x() / epsilon), snapped_fraction(x.y() / epsilon)};
}

int cells_per_side(double length, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::invalid_periodicity, "epsilon must be positive");
  }
  const double cells = length / epsilon;
  const double r = std::round(cells);
  if (r < 1.0 || std::abs(cells - r) > 1e-9 * std::max(1.0, r)) {
    throw Error(ErrorCode::invalid_periodicity,
                "domain side is not a whole number of periods (" + std::to_string(cells) + ")");
  }
  return static_cast<int>(r);
}

Mesh assign_phases(const Mesh& mesh, const InclusionSpec& geometry, std::optional<double> epsilon) {
  geometry.validate();
  if (epsilon) {
    if (mesh.structured()) {
      const auto& d = mesh.structured()->domain;
      (void)cells_per_side(d.width(), *epsilon);
      (void)cells_per_side(d.height(), *epsilon);
    } else if (!(*epsilon > 0.0)) {
      throw Error(ErrorCode::invalid_periodicity, "epsilon must be positive");
    }
  }
  std::vector<Phase> phases;
  phases.reserve(mesh.element_count());
  for (const auto& g : mesh.geometry()) {
    const Vec2 y = epsilon ? micro_coords(g.centroid, *epsilon) : g.centroid;
    phases.push_back(geometry.phase_at(y));
  }
  return mesh.with_phases(std::move(phases));
}

std::vector<int> boundary_nodes(const Mesh& mesh, BoundaryTag tag) {
  if (tag == BoundaryTag::none || static_cast<std::uint8_t>(tag) > static_cast<std::uint8_t>(BoundaryTag::all)) {
    throw Error(ErrorCode::unknown_marker, "invalid boundary tag");
  }
  std::vector<int> out;
  const auto& markers = mesh.boundary_markers();
  for (int v = 0; v < static_cast<int>(markers.size()); ++v) {
    if (intersects(markers[v], tag)) {
      out.push_back(v);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::unknown_marker, "no node carries boundary tag " + to_string(tag));
  }
  return out;
}

}  // namespace homs
