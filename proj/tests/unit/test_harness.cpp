#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "homs/error.hpp"
#include "homs/harness.hpp"

using namespace homs;
namespace fs = std::filesystem;

namespace {

Vector sample(const Mesh& mesh, const std::function<double(const Vec2&)>& f) {
  Vector v(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    v[static_cast<Eigen::Index>(i)] = f(mesh.nodes()[i]);
  }
  return v;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::io;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("homs_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Small two-phase run: eps = 1/4, 4 elements per cell, 6 steps.
ExperimentConfig small_config(const fs::path& workspace) {
  ExperimentConfig c;
  c.workspace = workspace;
  c.epsilon = 0.25;
  c.cell_n = 8;
  c.macro_n = 8;
  c.dns_elements_per_cell = 4;
  c.final_time = 0.006;
  c.steps = 6;
  c.table_points = 4;
  c.table_range = {300.0, 700.0};
  return c;
}

}  // namespace

TEST(Transfer, ReproducesLinearFieldsExactly) {
  const Mesh coarse = build_structured_mesh(Rect::unit(), 4);
  const Mesh fine = build_structured_mesh(Rect::unit(), 12);
  const auto linear = [](const Vec2& x) { return 2.0 * x.x() - 0.5 * x.y() + 3.0; };
  const Vector moved = transfer_to_fine(coarse, sample(coarse, linear), fine);
  EXPECT_LT((moved - sample(fine, linear)).cwiseAbs().maxCoeff(), 1e-13);
  const Vector constant = transfer_to_fine(coarse, Vector::Constant(25, 7.0), fine);
  EXPECT_LT((constant.array() - 7.0).abs().maxCoeff(), 1e-13);
}

TEST(Transfer, QuadraticInterpolationErrorIsSecondOrder) {
  const Mesh fine = build_structured_mesh(Rect::unit(), 64);
  const auto f = [](const Vec2& x) { return x.x() * x.x() + x.x() * x.y(); };
  const Vector exact = sample(fine, f);
  std::vector<double> h, err;
  for (int n : {4, 8, 16}) {
    const Mesh coarse = build_structured_mesh(Rect::unit(), n);
    h.push_back(1.0 / n);
    err.push_back(l2_norm(fine, transfer_to_fine(coarse, sample(coarse, f), fine) - exact));
  }
  EXPECT_NEAR(observed_order(h, err), 2.0, 0.15);
}

TEST(Transfer, PointsOutsideTheCoarseMeshAreGeometryMismatches) {
  const Mesh coarse = build_structured_mesh(Rect{0.0, 0.0, 0.5, 0.5}, 4);
  const Mesh fine = build_structured_mesh(Rect::unit(), 4);
  EXPECT_EQ(code_of([&] { (void)transfer_to_fine(coarse, Vector::Zero(25), fine); }), ErrorCode::geometry_mismatch);
}

TEST(RelativeError, MatchesClosedForms) {
  const Mesh mesh = build_structured_mesh(Rect::unit(), 8);
  const Vector x1 = sample(mesh, [](const Vec2& x) { return x.x(); });
  const Vector tilted = sample(mesh, [](const Vec2& x) { return x.x() + 0.1 * x.y(); });
  EXPECT_EQ(relative_error(x1, x1, mesh, Norm::l2), 0.0);
  EXPECT_EQ(relative_error(x1, x1, mesh, Norm::h1_semi), 0.0);
  EXPECT_NEAR(relative_error(2.0 * x1, x1, mesh, Norm::l2), 1.0, 1e-14);
  EXPECT_NEAR(relative_error(tilted, x1, mesh, Norm::h1_semi), 0.1, 1e-13);
  EXPECT_GT(relative_error(tilted, x1, mesh, Norm::l2), 0.0);
}

TEST(RelativeError, ZeroReferenceIsUndefined) {
  const Mesh mesh = build_structured_mesh(Rect::unit(), 4);
  const Vector zero = Vector::Zero(25);
  const Vector constant = Vector::Constant(25, 300.0);
  EXPECT_EQ(code_of([&] { (void)relative_error(constant, zero, mesh, Norm::l2); }),
            ErrorCode::undefined_relative_error);
  EXPECT_EQ(code_of([&] { (void)relative_error(zero, constant, mesh, Norm::h1_semi); }),
            ErrorCode::undefined_relative_error);
}

TEST(ObservedOrder, RecoversPowerLaws) {
  EXPECT_NEAR(observed_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}), 2.0, 1e-12);
  EXPECT_NEAR(observed_order({0.25, 0.125, 0.0625}, {0.5, 0.5 / std::sqrt(2.0), 0.25}), 0.5, 1e-12);
  EXPECT_TRUE(std::isnan(observed_order({0.1, 0.05}, {1.0, 0.0})));
  EXPECT_THROW((void)observed_order({0.1}, {1.0}), Error);
}

TEST(ErrorReport, CsvHasTheFixedSchema) {
  ErrorReport r;
  ErrorRow row;
  row.step = 3;
  row.time = 0.1;
  row.temperature_l2 = {0.3, 0.2, 0.1};
  row.potential_h1 = {1.0, 0.5, 1.0 / 3.0};
  r.rows.push_back(row);
  const fs::path dir = scratch("csv");
  write_csv(dir / "e.csv", r.csv());
  const std::string text = read_text_file(dir / "e.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "step,time,Terr0,Terr1,Terr2,TErr0,TErr1,TErr2,Perr0,Perr1,Perr2,PErr0,PErr1,PErr2");
  EXPECT_NE(text.find("3,0.10000000000000001,0.29999999999999999,"), std::string::npos);
  EXPECT_NE(text.find(",0.33333333333333331\n"), std::string::npos);
  fs::remove_all(dir);
}

TEST(ManufacturedProblem, RatesAreSecondOrder) {
  const ManufacturedProblem mp;
  const auto space = sweep_macro_space(mp, {8, 16, 32}, 0.2, 1);
  EXPECT_NEAR(space.orders[0], 2.0, 0.2);
  EXPECT_NEAR(space.orders[1], 2.0, 0.2);
  const auto time = sweep_macro_time(mp, 12, 0.2, {5, 10, 20}, 320);
  EXPECT_NEAR(time.orders[0], 2.0, 0.2);
  EXPECT_EQ(time.csv().header, (std::vector<std::string>{"dt", "temperature_l2"}));
}

TEST(ManufacturedProblem, ExactFieldsSatisfyTheData) {
  const ManufacturedProblem mp;
  const auto data = mp.data({0.2, 4});
  EXPECT_DOUBLE_EQ(mp.temperature({0.0, 0.4}, 0.13), mp.ambient);
  EXPECT_DOUBLE_EQ(mp.potential({0.7, 1.0}), 0.0);
  // Steady, uncoupled limit: omega -> 0 with no amplitude leaves only the Joule balance.
  ManufacturedProblem still = mp;
  still.amplitude = 0.0;
  const Vec2 x(0.3, 0.6);
  const double g2 = std::pow((1 - 2 * x.x()) * x.y() * (1 - x.y()), 2) + std::pow((1 - 2 * x.y()) * x.x() * (1 - x.x()), 2);
  EXPECT_NEAR(still.data({1.0, 1}).heat_source(x, 0.5), -mp.sigma.value(mp.ambient) * g2, 1e-10);
  EXPECT_GT(data.charge_source(x, 0.0), 0.0);
}

TEST(CellMeshSweep, LaminateConvergesAtSecondOrder) {
  InclusionSpec laminate;
  laminate.shape = InclusionSpec::Shape::laminate_x1;
  laminate.volume_fraction = 0.5;
  const auto s = sweep_cell_mesh(laminate, MaterialLaw::benchmark_composite(), 300.0, CellBoundaryMode::dirichlet,
                                 {8, 16, 32}, 128);
  EXPECT_NEAR(s.orders[0], 2.0, 0.2);
  EXPECT_THROW((void)sweep_cell_mesh(laminate, MaterialLaw::benchmark_composite(), 300.0,
                                     CellBoundaryMode::dirichlet, {8, 16}, 64),
               Error);
}

TEST(Experiment, HomogeneousMaterialMakesEveryMethodExact) {
  const fs::path dir = scratch("homogeneous");
  auto c = small_config(dir);
  c.law = MaterialLaw::homogeneous(MaterialLaw::benchmark_composite().at(Phase::matrix));
  c.macro_n = 16;  // same nodes as the DNS mesh
  const auto result = run_experiment(c);
  ASSERT_EQ(result.report.rows.size(), 6u);
  for (const auto& row : result.report.rows) {
    for (const auto* a : {&row.temperature_l2, &row.temperature_h1, &row.potential_l2, &row.potential_h1}) {
      for (double e : *a) {
        EXPECT_LE(e, 1e-8);
      }
    }
  }
  fs::remove_all(dir);
}

TEST(Experiment, TwoPhaseRunWritesArtifactsAndReusesTheTable) {
  const fs::path dir = scratch("two_phase");
  auto c = small_config(dir);
  c.vtk_stride = 3;
  const auto first = run_experiment(c);
  EXPECT_FALSE(first.report.times.table_cached);
  EXPECT_TRUE(fs::exists(dir / "cache/offline/manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "out/timings.json"));
  EXPECT_EQ(first.vtk_paths.size(), 6u);  // levels 0, 3, 6 on both meshes
  const auto& final = first.report.final();
  EXPECT_EQ(final.step, 6);
  for (double e : final.temperature_h1) {
    EXPECT_TRUE(std::isfinite(e) && e > 0.0);
  }
  const std::string csv = read_text_file(first.csv_path);

  const auto second = run_experiment(c);
  EXPECT_TRUE(second.report.times.table_cached);
  EXPECT_EQ(read_text_file(second.csv_path), csv);

  // A different table grid invalidates the cache.
  c.table_points = 5;
  EXPECT_FALSE(run_experiment(c).report.times.table_cached);
  fs::remove_all(dir);
}

TEST(Experiment, StageFailuresAreTagged) {
  const fs::path dir = scratch("failure");
  auto c = small_config(dir);
  c.linearization = Linearization::picard;
  c.picard_max_iter = 1;
  c.picard_tol = 1e-300;
  try {
    (void)run_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::picard_non_convergence);
    EXPECT_NE(std::string(e.what()).find("stage dns"), std::string::npos);
  }
  c = small_config(dir);
  c.steps = 0;
  EXPECT_EQ(code_of([&] { (void)run_experiment(c); }), ErrorCode::invalid_config);
  fs::remove_all(dir);
}

TEST(Sweep, EpsilonLadderReportsEveryMetric) {
  const fs::path dir = scratch("sweep");
  auto c = small_config(dir);
  c.macro_n = 16;
  const auto s = sweep_epsilon(c, {0.5, 0.25, 0.125});
  EXPECT_EQ(s.parameter, (std::vector<double>{0.5, 0.25, 0.125}));
  EXPECT_EQ(s.error_names.size(), 12u);
  EXPECT_EQ(s.orders.size(), 12u);
  EXPECT_EQ(s.csv().header.front(), "epsilon");
  EXPECT_EQ(s.orders_csv().columns.size(), 12u);
  EXPECT_THROW((void)sweep_epsilon(c, {0.5, 0.25}), Error);
  fs::remove_all(dir);
}
