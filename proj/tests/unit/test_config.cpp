#include <gtest/gtest.h>

#include <filesystem>

#include "homs/config.hpp"
#include "homs/error.hpp"
#include "homs/io.hpp"

using namespace homs;
namespace fs = std::filesystem;

namespace {

const char* kExample = R"(
[geometry]
shape = "centered_disk"
volume_fraction = 0.3
epsilon = 0.25

[materials.matrix]
rho = 0.008
c = [562.5]
k = [4.0, 0.0004]
sigma = [300.0, -0.015]

[materials.inclusion]
k = [0.04, 0.000004]

[discretization]
cell_n = 16
macro_n = 24
dns_elements_per_cell = 8

[time]
final_time = 0.05
steps = 50

[offline]
u_min = 300
u_max = 900
points = 12
bc_mode = "periodic"

[solver]
method = "cg"
tol = 1e-9

[output]
dir = "runs/a"
vtk_stride = 10

[toggles]
chain_rule_terms = false
linearization = "picard"
)";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::io;
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const auto c = parse_config("", ".");
  EXPECT_EQ(c.geometry.shape, InclusionSpec::Shape::centered_square);
  EXPECT_DOUBLE_EQ(c.geometry.volume_fraction, 0.25);
  EXPECT_DOUBLE_EQ(c.epsilon, 0.125);
  EXPECT_EQ(c.steps, 100);
  EXPECT_DOUBLE_EQ(c.final_time, 0.1);
  EXPECT_EQ(c.bc_mode, CellBoundaryMode::dirichlet);
  EXPECT_EQ(c.law.canonical(), MaterialLaw::benchmark_composite().canonical());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ReadsEverySection) {
  const auto c = parse_config(kExample, "/ws");
  EXPECT_EQ(c.geometry.shape, InclusionSpec::Shape::centered_disk);
  EXPECT_DOUBLE_EQ(c.geometry.volume_fraction, 0.3);
  EXPECT_DOUBLE_EQ(c.epsilon, 0.25);
  EXPECT_DOUBLE_EQ(c.law.at(Phase::matrix).rho.value(500.0), 0.008);
  EXPECT_DOUBLE_EQ(c.law.at(Phase::matrix).k.value(500.0), 4.2);
  EXPECT_DOUBLE_EQ(c.law.at(Phase::inclusion).k.d1(0.0), 0.000004);
  // Keys absent from the file keep the benchmark law.
  EXPECT_DOUBLE_EQ(c.law.at(Phase::inclusion).c.value(0.0), 750.0);
  EXPECT_EQ(c.cell_n, 16);
  EXPECT_EQ(c.macro_n, 24);
  EXPECT_EQ(c.dns_elements_per_cell, 8);
  EXPECT_EQ(c.steps, 50);
  EXPECT_DOUBLE_EQ(c.table_range.hi, 900.0);
  EXPECT_EQ(c.table_points, 12);
  EXPECT_EQ(c.bc_mode, CellBoundaryMode::periodic);
  EXPECT_EQ(c.solver.method, SolverOptions::Method::cg);
  EXPECT_DOUBLE_EQ(c.solver.tol, 1e-9);
  EXPECT_EQ(c.vtk_stride, 10);
  EXPECT_FALSE(c.chain_rule_terms);
  EXPECT_EQ(c.linearization, Linearization::picard);
  EXPECT_EQ(c.resolve(c.output_dir), fs::path("/ws/runs/a"));
  EXPECT_EQ(c.resolve("/abs/x"), fs::path("/abs/x"));
}

TEST(Config, OverridesReplaceFileValues) {
  const auto c = parse_config(kExample, ".",
                              {"geometry.epsilon=0.125", "offline.bc_mode=dirichlet", "time.steps = 7",
                               "toggles.chain_rule_terms=true", "materials.matrix.k=[5.0, 0.001]"});
  EXPECT_DOUBLE_EQ(c.epsilon, 0.125);
  EXPECT_EQ(c.bc_mode, CellBoundaryMode::dirichlet);
  EXPECT_EQ(c.steps, 7);
  EXPECT_TRUE(c.chain_rule_terms);
  EXPECT_DOUBLE_EQ(c.law.at(Phase::matrix).k.value(1000.0), 6.0);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_EQ(code_of([] { (void)parse_config("[geometry]\nepsilonn = 0.1\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[colour]\nx = 1\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("", ".", {"time.stepz=3"}); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[time]\nsteps = 1.5\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[time]\nsteps = \"ten\"\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[geometry]\nshape = \"hexagon\"\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[toggles]\nchain_rule_terms = 1\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[materials.matrix]\nk = []\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("[geometry\n", "."); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { (void)parse_config("", ".", {"no_equals_sign"}); }), ErrorCode::invalid_config);
}

TEST(Config, ValidationChecksConsistency) {
  EXPECT_EQ(code_of([] { parse_config("[geometry]\nepsilon = 0.3\n", ".").validate(); }),
            ErrorCode::invalid_periodicity);
  EXPECT_EQ(code_of([] { parse_config("[offline]\npoints = 1\n", ".").validate(); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { parse_config("[offline]\nu_min = 500\nu_max = 400\n", ".").validate(); }),
            ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { parse_config("[materials.inclusion]\nk = [-1.0]\n", ".").validate(); }),
            ErrorCode::non_elliptic_material);
  EXPECT_EQ(code_of([] { parse_config("", "/definitely/not/here").validate(); }), ErrorCode::io);
}

TEST(Config, TomlRenderingRoundTrips) {
  const auto c = parse_config(kExample, ".");
  const std::string text = to_toml(c);
  const auto again = parse_config(text, ".");
  EXPECT_EQ(to_toml(again), text);
  EXPECT_EQ(again.law.canonical(), c.law.canonical());
  EXPECT_EQ(again.geometry.shape, c.geometry.shape);
  EXPECT_DOUBLE_EQ(again.picard_tol, c.picard_tol);
}

TEST(Config, LoadResolvesWorkspaceAgainstTheFile) {
  const fs::path dir = fs::temp_directory_path() / "homs_config_test";
  fs::create_directories(dir / "sub");
  write_text_file(dir / "exp.toml", "workspace = \"sub\"\n[time]\nsteps = 3\n");
  const auto c = load_config(dir / "exp.toml");
  EXPECT_EQ(c.workspace, dir / "sub");
  EXPECT_EQ(c.steps, 3);
  write_text_file(dir / "plain.toml", "");
  EXPECT_EQ(load_config(dir / "plain.toml").workspace, dir);
  EXPECT_EQ(code_of([&] { (void)load_config(dir / "missing.toml"); }), ErrorCode::io);
  fs::remove_all(dir);
}

TEST(Config, DerivedObjectsFollowTheFile) {
  const auto c = parse_config(kExample, ".");
  const auto p = c.problem();
  EXPECT_EQ(p.time.steps, 50);
  EXPECT_DOUBLE_EQ(p.heat_source({0.3, 0.3}, 0.0), 20000.0);
  EXPECT_DOUBLE_EQ(p.initial_temperature({0.1, 0.9}), 300.0);
  const auto d = c.dns();
  EXPECT_DOUBLE_EQ(d.epsilon, 0.25);
  EXPECT_EQ(d.elements_per_cell, 8);
  EXPECT_EQ(d.linearization, Linearization::picard);
  const auto key = c.table_key();
  EXPECT_EQ(key.cell.n, 16);
  EXPECT_EQ(key.n_points, 12);
  EXPECT_FALSE(key.chain_rule_terms);
}
