#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homs/mesh.hpp"

namespace homs {

/// Polynomial temperature law c0 + c1 u + c2 u^2 + ... with analytic derivatives.
/// The experiment files only declare affine laws (intercept, slope).
class TemperatureLaw {
 public:
  TemperatureLaw() = default;
  explicit TemperatureLaw(std::vector<double> coefficients);

  [[nodiscard]] static TemperatureLaw affine(double intercept, double slope) {
    return TemperatureLaw({intercept, slope});
  }
  [[nodiscard]] static TemperatureLaw constant(double value) { return TemperatureLaw({value}); }

  [[nodiscard]] double value(double u) const;
  [[nodiscard]] double d1(double u) const;
  [[nodiscard]] double d2(double u) const;
  /// Minimum and maximum over [lo, hi].
  [[nodiscard]] std::pair<double, double> range(double lo, double hi) const;

  [[nodiscard]] const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> coefficients_{0.0};
};

/// Temperature laws of one constituent; conductivities are isotropic.
struct PhaseLaw {
  TemperatureLaw rho;
  TemperatureLaw c;
  TemperatureLaw k;
  TemperatureLaw sigma;
};

/// Coefficients of one phase at one temperature, with their u-derivatives.
struct CoefficientSample {
  double rho = 0.0;
  double c = 0.0;
  double k = 0.0;
  double sigma = 0.0;
  double d1_rho = 0.0;
  double d1_c = 0.0;
  double d1_k = 0.0;
  double d1_sigma = 0.0;
  double d2_k = 0.0;
  double d2_sigma = 0.0;

  [[nodiscard]] double heat_capacity() const { return rho * c; }
};

struct TemperatureRange {
  double lo = 300.0;
  double hi = 400.0;
};

struct EllipticityBounds {
  double lower = 0.0;
  double upper = 0.0;
};

class MaterialLaw {
 public:
  MaterialLaw() = default;

  void set(Phase phase, PhaseLaw law);
  [[nodiscard]] bool has(Phase phase) const;
  [[nodiscard]] const PhaseLaw& at(Phase phase) const;

  /// Throws ErrorCode::unknown_phase when `phase` has no law.
  [[nodiscard]] CoefficientSample eval(Phase phase, double u) const;

  /// Canonical text form used for fingerprints and persistence.
  [[nodiscard]] std::string canonical() const;

  /// Table 1 matrix/inclusion laws of the two-phase benchmark composite.
  [[nodiscard]] static MaterialLaw benchmark_composite();
  /// Both phases share `law`.
  [[nodiscard]] static MaterialLaw homogeneous(const PhaseLaw& law);

 private:
  std::array<std::optional<PhaseLaw>, kPhaseCount> phases_;
};

/// gamma0 = min over phases and range of min(k, sigma); gamma1 the max analog.
/// Throws ErrorCode::non_elliptic_material when gamma0 <= 0.
[[nodiscard]] EllipticityBounds ellipticity_bounds(const MaterialLaw& law, const TemperatureRange& range);

/// Checks rho, c > 0 over the range as well; throws non_elliptic_material.
void validate_material(const MaterialLaw& law, const TemperatureRange& range);

}  // namespace homs
