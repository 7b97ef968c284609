#include <gtest/gtest.h>

#include <cmath>

#include "homs/cell_solver.hpp"
#include "homs/error.hpp"
#include "homs/homogenizer.hpp"

using namespace homs;

namespace {

Mesh cell_mesh(InclusionSpec::Shape shape, double fraction, int n) {
  return assign_phases(build_structured_mesh(Rect::unit(), n), InclusionSpec{shape, fraction});
}

PhaseLaw constant_law(double rho, double c, double k, double sigma) {
  return {TemperatureLaw::constant(rho), TemperatureLaw::constant(c), TemperatureLaw::constant(k),
          TemperatureLaw::constant(sigma)};
}

FirstOrderDerivatives central_derivatives(const Mesh& mesh, const MaterialLaw& law, double u0,
                                          CellBoundaryMode mode, double h) {
  const auto p = solve_first_order(mesh, law, u0 + h, mode);
  const auto m = solve_first_order(mesh, law, u0 - h, mode);
  FirstOrderDerivatives d;
  for (int a = 0; a < 2; ++a) {
    d.dM[a] = (p.M[a] - m.M[a]) / (2 * h);
    d.dN[a] = (p.N[a] - m.N[a]) / (2 * h);
  }
  return d;
}

CellFunctionSet full_set(const Mesh& mesh, const MaterialLaw& law, double u0, CellBoundaryMode mode) {
  const CellOperators ops(mesh, law, u0, mode);
  const auto first = solve_first_order(ops);
  const auto homog = compute_homogenized(mesh, law, u0, first);
  return solve_second_order(ops, first, homog, central_derivatives(mesh, law, u0, mode, 1.0));
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Independent laminate values: harmonic and arithmetic means of two equal layers.
double harmonic(double a, double b) { return 2 * a * b / (a + b); }
double arithmetic(double a, double b) { return 0.5 * (a + b); }

}  // namespace

TEST(CellSolver, HomogeneousMaterialGivesZeroFields) {
  const auto law = MaterialLaw::homogeneous(
      {TemperatureLaw::constant(2.0), TemperatureLaw::constant(3.0), TemperatureLaw::affine(1.0, 0.01),
       TemperatureLaw::affine(5.0, -0.002)});
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 16);
  for (auto mode : {CellBoundaryMode::dirichlet, CellBoundaryMode::periodic}) {
    const auto set = full_set(mesh, law, 320.0, mode);
    for (const auto& [name, field] : set.fields()) {
      EXPECT_LE(max_abs(*field), 1e-10) << name;
    }
    const auto h = compute_homogenized(mesh, law, 320.0, solve_first_order(mesh, law, 320.0, mode));
    EXPECT_LT((h.k_hat - 4.2 * Mat2::Identity()).norm(), 1e-10);
    EXPECT_LT((h.sigma_hat - 4.36 * Mat2::Identity()).norm(), 1e-10);
    EXPECT_NEAR(h.S_hat, 6.0, 1e-12);
    EXPECT_EQ(check_sigma_star_identity(h, 1e-12).pass, true);
  }
}

TEST(CellSolver, ZeroRightHandSideGivesZero) {
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 8);
  const Vector coeff = Vector::Constant(static_cast<Eigen::Index>(mesh.element_count()), 2.0);
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  for (auto mode : {CellBoundaryMode::dirichlet, CellBoundaryMode::periodic}) {
    EXPECT_EQ(max_abs(solve_cell_problem(mesh, coeff, zero, mode).values), 0.0);
  }
}

TEST(CellSolver, DirichletFieldsVanishOnBoundaryPeriodicFieldsHaveZeroMean) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 16);
  const auto dir = full_set(mesh, law, 350.0, CellBoundaryMode::dirichlet);
  for (const auto& [name, field] : dir.fields()) {
    for (int node : boundary_nodes(mesh, BoundaryTag::all)) {
      EXPECT_EQ((*field)[node], 0.0) << name;
    }
  }
  const auto per = full_set(mesh, law, 350.0, CellBoundaryMode::periodic);
  for (const auto& [name, field] : per.fields()) {
    EXPECT_LE(std::abs(mean_value(mesh, *field)), 1e-12 * std::max(1.0, max_abs(*field))) << name;
  }
}

TEST(CellSolver, LaminateCorrectorIsPiecewiseLinear) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::laminate_x1, 0.5, 32);
  const auto first = solve_first_order(mesh, law, 300.0, CellBoundaryMode::periodic);
  const double k_matrix = 4.12;
  const double k_inclusion = 0.0412;
  const double k_eff = harmonic(k_matrix, k_inclusion);
  const auto grads = element_gradients(mesh, first.M[0]);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double k = mesh.element_phase()[e] == Phase::matrix ? k_matrix : k_inclusion;
    EXPECT_NEAR(grads[e].x(), k_eff / k - 1.0, 1e-9);
    EXPECT_NEAR(grads[e].y(), 0.0, 1e-9);
  }
  EXPECT_LE(max_abs(first.M[1]), 1e-12);
}

TEST(Homogenizer, LaminateMeansPeriodic) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::laminate_x1, 0.5, 64);
  const auto h = compute_homogenized(mesh, law, 300.0, solve_first_order(mesh, law, 300.0, CellBoundaryMode::periodic));
  EXPECT_NEAR(h.k_hat(0, 0) / harmonic(4.12, 0.0412), 1.0, 1e-10);
  EXPECT_NEAR(h.k_hat(1, 1) / arithmetic(4.12, 0.0412), 1.0, 1e-10);
  EXPECT_NEAR(h.sigma_hat(0, 0) / harmonic(295.5, 0.072), 1.0, 1e-10);
  EXPECT_NEAR(h.sigma_hat(1, 1) / arithmetic(295.5, 0.072), 1.0, 1e-10);
  EXPECT_NEAR(h.k_hat(0, 0), 0.0816, 0.01 * 0.0816);
  EXPECT_NEAR(h.k_hat(1, 1), 2.0806, 0.01 * 2.0806);
  EXPECT_NEAR(h.S_hat, 3.0, 1e-12);
  EXPECT_LE(check_sigma_star_identity(h, 1e-8).residual, 1e-8);
}

TEST(Homogenizer, SigmaStarIdentityDirichletSquare) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 32);
  for (double u : {300.0, 350.0, 400.0}) {
    const auto h = compute_homogenized(mesh, law, u, solve_first_order(mesh, law, u, CellBoundaryMode::dirichlet));
    EXPECT_TRUE(check_sigma_star_identity(h, 1e-6).pass);
    EXPECT_LE((h.k_hat - h.k_hat.transpose()).norm(), 1e-10 * h.k_hat.norm());
    EXPECT_LE((h.sigma_hat - h.sigma_hat.transpose()).norm(), 1e-10 * h.sigma_hat.norm());
  }
}

TEST(Homogenizer, SandwichBoundsAndEllipticity) {
  const auto law = MaterialLaw::benchmark_composite();
  const auto bounds = ellipticity_bounds(law, {300.0, 400.0});
  for (auto shape : {InclusionSpec::Shape::centered_square, InclusionSpec::Shape::centered_disk,
                     InclusionSpec::Shape::laminate_x1}) {
    const Mesh mesh = cell_mesh(shape, 0.25, 24);
    double f = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
      if (mesh.element_phase()[e] == Phase::inclusion) {
        f += mesh.geometry()[e].area;
      }
    }
    for (auto mode : {CellBoundaryMode::periodic, CellBoundaryMode::dirichlet}) {
      const auto h = compute_homogenized(mesh, law, 330.0, solve_first_order(mesh, law, 330.0, mode));
      const double km = law.eval(Phase::matrix, 330.0).k;
      const double ki = law.eval(Phase::inclusion, 330.0).k;
      const double lower = 1.0 / ((1 - f) / km + f / ki);
      const double upper = (1 - f) * km + f * ki;
      const auto ev = symmetric_eigenvalues(h.k_hat);
      EXPECT_GE(ev[0], lower * (1 - 1e-10));
      EXPECT_LE(ev[1], upper * (1 + 1e-10));
      EXPECT_TRUE(check_ellipticity(h, bounds).pass);
    }
  }
}

TEST(Homogenizer, EllipticityChecks) {
  HomogenizedCoefficients id;
  id.S_hat = 1.0;
  id.k_hat = Mat2::Identity();
  id.sigma_hat = Mat2::Identity();
  const auto r = check_ellipticity(id, {0.5, 2.0});
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.k_eigenvalues[0], 1.0);
  EXPECT_DOUBLE_EQ(r.k_eigenvalues[1], 1.0);

  HomogenizedCoefficients lam = id;
  lam.k_hat = Eigen::Vector2d(0.0816, 2.0806).asDiagonal();
  lam.sigma_hat = Eigen::Vector2d(0.144, 147.8).asDiagonal();
  EXPECT_TRUE(check_ellipticity(lam, {0.0412, 295.5}).pass);

  HomogenizedCoefficients neg = id;
  neg.k_hat = -Mat2::Identity();
  EXPECT_FALSE(check_ellipticity(neg, {0.5, 2.0}).pass);

  HomogenizedCoefficients skew = id;
  skew.k_hat(0, 1) = 0.5;
  try {
    (void)check_ellipticity(skew, {0.5, 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_tensor);
  }
}

TEST(Homogenizer, MonotoneAndLipschitzInTemperature) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 16);
  std::vector<Mat2> k;
  const std::vector<double> temps{300.0, 325.0, 350.0, 375.0, 400.0};
  for (double u : temps) {
    k.push_back(compute_homogenized(mesh, law, u, solve_first_order(mesh, law, u, CellBoundaryMode::dirichlet)).k_hat);
  }
  for (std::size_t s = 1; s < temps.size(); ++s) {
    EXPECT_GT(k[s](0, 0), k[s - 1](0, 0));
    EXPECT_GT(k[s](1, 1), k[s - 1](1, 1));
    EXPECT_LE((k[s] - k[s - 1]).cwiseAbs().maxCoeff() / (temps[s] - temps[s - 1]), 0.0004 + 1e-12);
  }
}

TEST(Homogenizer, MismatchedFieldsRejected) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh a = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 8);
  const Mesh b = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 12);
  const auto first = solve_first_order(a, law, 300.0, CellBoundaryMode::dirichlet);
  try {
    (void)compute_homogenized(b, law, 300.0, first);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provenance);
  }
  EXPECT_THROW((void)compute_homogenized(a, law, 310.0, first), Error);
}

TEST(CellSolver, CenteredSquareMirrorSymmetry) {
  const auto law = MaterialLaw::benchmark_composite();
  const int n = 20;
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, n);
  for (auto mode : {CellBoundaryMode::dirichlet, CellBoundaryMode::periodic}) {
    const auto first = solve_first_order(mesh, law, 300.0, mode);
    const double scale = max_abs(first.M[0]);
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        const int node = i + j * (n + 1);
        const int mirror_x = (n - i) + j * (n + 1);
        const int mirror_y = i + (n - j) * (n + 1);
        EXPECT_NEAR(first.M[0][node], -first.M[0][mirror_x], 1e-9 * scale);
        EXPECT_NEAR(first.M[0][node], first.M[0][mirror_y], 1e-9 * scale);
      }
    }
  }
}

TEST(CellSolver, TemperatureIndependentLawsHaveNoDerivativeFamilies) {
  MaterialLaw law;
  law.set(Phase::matrix, constant_law(0.008, 562.5, 4.12, 295.5));
  law.set(Phase::inclusion, constant_law(0.002, 750.0, 0.0412, 0.072));
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 16);
  const auto set = full_set(mesh, law, 300.0, CellBoundaryMode::periodic);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      EXPECT_EQ(max_abs(set.H[a][b]), 0.0);
      EXPECT_EQ(max_abs(set.W[a][b]), 0.0);
      EXPECT_LE(max_abs(set.R2[a][b]), 1e-10);
      EXPECT_LE(max_abs(set.Z2[a][b]), 1e-10);
    }
  }
  EXPECT_GT(max_abs(set.Q), 1e-6);
  EXPECT_GT(max_abs(set.M2[0][0]), 1e-6);
  EXPECT_GT(max_abs(set.G[0][0]), 1e-9);
}

TEST(CellSolver, SecondOrderRequiresHomogenizedCoefficients) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 8);
  const CellOperators ops(mesh, law, 300.0, CellBoundaryMode::dirichlet);
  const auto first = solve_first_order(ops);
  try {
    (void)solve_second_order(ops, first, HomogenizedCoefficients{}, FirstOrderDerivatives{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dependency_order);
  }
}

TEST(CellSolver, ChainRuleToggleZeroesFamilies) {
  const auto law = MaterialLaw::benchmark_composite();
  const Mesh mesh = cell_mesh(InclusionSpec::Shape::centered_square, 0.25, 12);
  const CellOperators ops(mesh, law, 300.0, CellBoundaryMode::dirichlet);
  const auto first = solve_first_order(ops);
  const auto homog = compute_homogenized(mesh, law, 300.0, first);
  const auto d1 = central_derivatives(mesh, law, 300.0, CellBoundaryMode::dirichlet, 1.0);
  const auto on = solve_second_order(ops, first, homog, d1);
  const auto off = solve_second_order(ops, first, homog, d1, {false});
  EXPECT_GT(max_abs(on.R2[0][0]) + max_abs(on.Z2[0][0]), 0.0);
  EXPECT_EQ(max_abs(off.R2[0][0]), 0.0);
  EXPECT_EQ(max_abs(off.Z2[1][1]), 0.0);
  EXPECT_EQ(on.M2[0][1], off.M2[0][1]);
}

namespace {

double band_difference(const Mesh& mesh, const FirstOrderFields& per, const FirstOrderFields& dir, double lo) {
  const auto gp = element_gradients(mesh, per.M[0]);
  const auto gd = element_gradients(mesh, dir.M[0]);
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double y2 = mesh.geometry()[e].centroid.y();
    if (y2 < lo || y2 > 1.0 - lo) {
      continue;
    }
    const double a = mesh.geometry()[e].area;
    diff += a * (gp[e] - gd[e]).squaredNorm();
    ref += a * gp[e].squaredNorm();
  }
  return std::sqrt(diff / ref);
}

}  // namespace

// The Dirichlet boundary layer of the high-contrast laminate decays slowly:
// about 15% relative H1 difference remains in the middle half of the cell,
// independent of the mesh, and it shrinks toward the centre line.
TEST(CellSolver, DirichletBoundaryLayerDecaysTowardCellCentre) {
  const auto law = MaterialLaw::benchmark_composite();
  std::vector<double> middle_half;
  for (int n : {32, 64}) {
    const Mesh mesh = cell_mesh(InclusionSpec::Shape::laminate_x1, 0.5, n);
    const auto per = solve_first_order(mesh, law, 300.0, CellBoundaryMode::periodic);
    const auto dir = solve_first_order(mesh, law, 300.0, CellBoundaryMode::dirichlet);
    const double wide = band_difference(mesh, per, dir, 0.25);
    const double narrow = band_difference(mesh, per, dir, 0.375);
    const double centre = band_difference(mesh, per, dir, 0.45);
    EXPECT_LT(narrow, wide);
    EXPECT_LT(centre, narrow);
    middle_half.push_back(wide);
  }
  EXPECT_NEAR(middle_half[0], middle_half[1], 0.01);
  EXPECT_LE(middle_half[1], 0.16);
}
