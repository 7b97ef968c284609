#pragma once

#include <functional>

#include "homs/fem.hpp"
#include "homs/mesh.hpp"

namespace homs {

struct TimeGrid {
  double final_time = 1.0;
  int steps = 1;

  [[nodiscard]] double dt() const { return final_time / steps; }
  [[nodiscard]] double at(int n) const { return n * dt(); }
  /// t_{n+1/2}
  [[nodiscard]] double half(int n) const { return (n + 0.5) * dt(); }
  /// Throws ErrorCode::invalid_config unless steps >= 1 and final_time > 0.
  void validate() const;
};

using SpaceTimeFunction = std::function<double(const Vec2&, double)>;

[[nodiscard]] SpaceTimeFunction constant_in_space_time(double value);

/// Sources, boundary and initial data of the coupled thermo-electric problem.
/// Unset functions are zero. Dirichlet sides take precedence over flux sides.
struct ProblemData {
  BoundaryTag temperature_sides = BoundaryTag::all;
  BoundaryTag potential_sides = BoundaryTag::all;
  BoundaryTag heat_flux_sides = BoundaryTag::none;
  BoundaryTag charge_flux_sides = BoundaryTag::none;

  SpaceTimeFunction boundary_temperature;
  SpaceTimeFunction boundary_potential;
  SpaceTimeFunction heat_flux;
  SpaceTimeFunction charge_flux;
  SpaceTimeFunction heat_source;
  SpaceTimeFunction charge_source;
  ScalarFunction initial_temperature;

  TimeGrid time;

  /// Throws ErrorCode::invalid_config when the potential has no Dirichlet side.
  void validate() const;

  /// Constant heat and charge sources with fixed temperature and grounded
  /// potential on the whole boundary, starting from the boundary temperature.
  [[nodiscard]] static ProblemData benchmark(TimeGrid time, double heat_source = 20000.0,
                                             double charge_source = 200.0, double ambient = 300.0);
};

}  // namespace homs
