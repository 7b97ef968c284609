#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "homs/error.hpp"
#include "homs/mesh.hpp"

using namespace homs;

namespace {

double signed_area(const Mesh& m, std::size_t e) {
  const auto& t = m.elements()[e];
  const Vec2 a = m.nodes()[t[0]];
  const Vec2 b = m.nodes()[t[1]];
  const Vec2 c = m.nodes()[t[2]];
  return 0.5 * ((b - a).x() * (c - a).y() - (c - a).x() * (b - a).y());
}

}  // namespace

TEST(StructuredMesh, Counts) {
  const Mesh m2 = build_structured_mesh(Rect::unit(), 2);
  EXPECT_EQ(m2.node_count(), 9u);
  EXPECT_EQ(m2.element_count(), 8u);
  const Mesh m1 = build_structured_mesh(Rect::unit(), 1);
  EXPECT_EQ(m1.node_count(), 4u);
  EXPECT_EQ(m1.element_count(), 2u);
  EXPECT_EQ(boundary_nodes(m1, BoundaryTag::all), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(build_structured_mesh(Rect::unit(), 60).element_count(), 7200u);
}

TEST(StructuredMesh, RejectsZeroSubdivisions) {
  try {
    (void)build_structured_mesh(Rect::unit(), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_discretization);
  }
}

TEST(StructuredMesh, PositiveAreasSumToDomain) {
  const Rect domain{-0.5, 0.25, 1.5, 1.0};
  const Mesh m = build_structured_mesh(domain, 7);
  double total = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const double a = signed_area(m, e);
    EXPECT_GT(a, 0.0);
    total += a;
  }
  EXPECT_NEAR(total / domain.area(), 1.0, 1e-12);
}

TEST(StructuredMesh, BoundaryMarkersOnlyOnBoundary) {
  const Mesh m = build_structured_mesh(Rect::unit(), 5);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    const Vec2 p = m.nodes()[i];
    const bool on_boundary = p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
    EXPECT_EQ(m.boundary_marker(static_cast<int>(i)) != BoundaryTag::none, on_boundary);
  }
}

TEST(BoundaryNodes, SelectsSides) {
  const Mesh m = build_structured_mesh(Rect::unit(), 2);
  const auto all = boundary_nodes(m, BoundaryTag::all);
  EXPECT_EQ(all.size(), 8u);
  EXPECT_EQ(std::count(all.begin(), all.end(), 4), 0);
  const auto left = boundary_nodes(m, BoundaryTag::left);
  ASSERT_EQ(left.size(), 3u);
  for (int n : left) {
    EXPECT_EQ(m.nodes()[n].x(), 0.0);
  }
  EXPECT_TRUE(std::is_sorted(left.begin(), left.end()));
}

TEST(BoundaryNodes, UnknownTagThrows) {
  const Mesh m = build_structured_mesh(Rect::unit(), 2);
  try {
    (void)boundary_nodes(m, static_cast<BoundaryTag>(64));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_marker);
  }
  EXPECT_THROW((void)parse_boundary_tag("front"), Error);
  EXPECT_EQ(parse_boundary_tag("left+top"), BoundaryTag::left | BoundaryTag::top);
}

TEST(Phases, CenteredShapesAndLaminate) {
  const InclusionSpec square{InclusionSpec::Shape::centered_square, 0.25};
  EXPECT_EQ(square.phase_at({0.5, 0.5}), Phase::inclusion);
  EXPECT_EQ(square.phase_at({0.05, 0.05}), Phase::matrix);
  const InclusionSpec disk{InclusionSpec::Shape::centered_disk, 0.2};
  EXPECT_EQ(disk.phase_at({0.5, 0.5}), Phase::inclusion);
  EXPECT_EQ(disk.phase_at({0.05, 0.05}), Phase::matrix);
  const InclusionSpec lam{InclusionSpec::Shape::laminate_x1, 0.5};
  EXPECT_EQ(lam.phase_at({0.6, 0.1}), Phase::inclusion);
  EXPECT_EQ(lam.phase_at({0.2, 0.9}), Phase::matrix);
}

TEST(Phases, SquareFractionMatchesOnAlignedMesh) {
  const InclusionSpec square{InclusionSpec::Shape::centered_square, 0.25};
  const Mesh m = assign_phases(build_structured_mesh(Rect::unit(), 16), square);
  double area = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    if (m.element_phase()[e] == Phase::inclusion) {
      area += m.geometry()[e].area;
    }
  }
  EXPECT_NEAR(area, 0.25, 1e-12);
}

TEST(Phases, IdempotentAndDeterministic) {
  const InclusionSpec square{InclusionSpec::Shape::centered_square, 0.25};
  const Mesh base = build_structured_mesh(Rect::unit(), 12);
  const Mesh a = assign_phases(base, square, 0.25);
  const Mesh b = assign_phases(a, square, 0.25);
  EXPECT_EQ(a.element_phase(), b.element_phase());
}

TEST(Phases, MirrorSymmetricForCenteredShapes) {
  for (auto shape : {InclusionSpec::Shape::centered_square, InclusionSpec::Shape::centered_disk}) {
    const InclusionSpec spec{shape, 0.2};
    const Mesh m = assign_phases(build_structured_mesh(Rect::unit(), 20), spec);
    for (std::size_t e = 0; e < m.element_count(); ++e) {
      const Vec2 c = m.geometry()[e].centroid;
      for (const Vec2& mirrored : {Vec2(1.0 - c.x(), c.y()), Vec2(c.x(), 1.0 - c.y())}) {
        const auto loc = m.locate(mirrored);
        EXPECT_EQ(m.element_phase()[static_cast<std::size_t>(loc.element)], m.element_phase()[e]);
        EXPECT_NEAR(m.geometry()[static_cast<std::size_t>(loc.element)].centroid.x(), mirrored.x(), 1e-12);
      }
    }
  }
}

TEST(Phases, PeriodicFoldingMatchesPointFunction) {
  const InclusionSpec square{InclusionSpec::Shape::centered_square, 0.25};
  const double eps = 0.25;
  const Mesh m = assign_phases(build_structured_mesh(Rect::unit(), 32), square, eps);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int checked = 0;
  for (int s = 0; s < 1000; ++s) {
    const Vec2 p(unif(rng), unif(rng));
    const auto loc = m.locate(p);
    const Vec2 c = m.geometry()[static_cast<std::size_t>(loc.element)].centroid;
    // Independent folding of the centroid into the cell.
    const Vec2 y(std::fmod(c.x() / eps, 1.0), std::fmod(c.y() / eps, 1.0));
    const bool inside = std::abs(y.x() - 0.5) < 0.25 && std::abs(y.y() - 0.5) < 0.25;
    EXPECT_EQ(m.element_phase()[static_cast<std::size_t>(loc.element)], inside ? Phase::inclusion : Phase::matrix);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Phases, NonIntegralPeriodRejected) {
  const InclusionSpec square{InclusionSpec::Shape::centered_square, 0.25};
  try {
    (void)assign_phases(build_structured_mesh(Rect::unit(), 8), square, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_periodicity);
  }
}

TEST(MicroCoords, FractionalPart) {
  Vec2 y = micro_coords({0.35, 0.35}, 0.1);
  EXPECT_NEAR(y.x(), 0.5, 1e-12);
  EXPECT_NEAR(y.y(), 0.5, 1e-12);
  y = micro_coords({0.125, 0.0}, 0.125);
  EXPECT_EQ(y.x(), 0.0);
  EXPECT_EQ(y.y(), 0.0);
  y = micro_coords({0.3, 0.6}, 0.1);
  EXPECT_EQ(y.x(), 0.0);
  EXPECT_EQ(y.y(), 0.0);
}

TEST(Locate, BarycentricReproducesLinearFields) {
  const Mesh m = build_structured_mesh(Rect{0.0, 0.0, 2.0, 1.0}, 9);
  Eigen::VectorXd f(static_cast<Eigen::Index>(m.node_count()));
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    f[static_cast<Eigen::Index>(i)] = 1.0 + 2.0 * m.nodes()[i].x() - 3.0 * m.nodes()[i].y();
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 2.0);
  std::uniform_real_distribution<double> uy(0.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    const Vec2 p(ux(rng), uy(rng));
    EXPECT_NEAR(m.evaluate(f, p), 1.0 + 2.0 * p.x() - 3.0 * p.y(), 1e-12);
  }
  EXPECT_THROW((void)m.locate({2.5, 0.5}), Error);
}
