#include "homs/materials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "homs/error.hpp"

namespace homs {

TemperatureLaw::TemperatureLaw(std::vector<double> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) {
    coefficients_.push_back(0.0);
  }
}

double TemperatureLaw::value(double u) const {
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    acc = acc * u + *it;
  }
  return acc;
}

double TemperatureLaw::d1(double u) const {
  double acc = 0.0;
  for (std::size_t p = coefficients_.size(); p-- > 1;) {
    acc = acc * u + static_cast<double>(p) * coefficients_[p];
  }
  return acc;
}

double TemperatureLaw::d2(double u) const {
  double acc = 0.0;
  for (std::size_t p = coefficients_.size(); p-- > 2;) {
    acc = acc * u + static_cast<double>(p * (p - 1)) * coefficients_[p];
  }
  return acc;
}

std::pair<double, double> TemperatureLaw::range(double lo, double hi) const {
  double mn = std::min(value(lo), value(hi));
  double mx = std::max(value(lo), value(hi));
  if (coefficients_.size() > 2) {
    // Sample interior extrema of higher-degree laws.
    constexpr int kSamples = 256;
    for (int s = 1; s < kSamples; ++s) {
      const double v = value(lo + (hi - lo) * s / kSamples);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  }
  return {mn, mx};
}

void MaterialLaw::set(Phase phase, PhaseLaw law) {
  phases_[static_cast<std::size_t>(phase)] = std::move(law);
}

bool MaterialLaw::has(Phase phase) const {
  return phases_[static_cast<std::size_t>(phase)].has_value();
}

const PhaseLaw& MaterialLaw::at(Phase phase) const {
  const auto& slot = phases_[static_cast<std::size_t>(phase)];
  if (!slot) {
    throw Error(ErrorCode::unknown_phase, "no law for phase " + std::string(to_string(phase)));
  }
  return *slot;
}

CoefficientSample MaterialLaw::eval(Phase phase, double u) const {
  const PhaseLaw& law = at(phase);
  CoefficientSample s;
  s.rho = law.rho.value(u);
  s.c = law.c.value(u);
  s.k = law.k.value(u);
  s.sigma = law.sigma.value(u);
  s.d1_rho = law.rho.d1(u);
  s.d1_c = law.c.d1(u);
  s.d1_k = law.k.d1(u);
  s.d1_sigma = law.sigma.d1(u);
  s.d2_k = law.k.d2(u);
  s.d2_sigma = law.sigma.d2(u);
  return s;
}

std::string MaterialLaw::canonical() const {
  std::string out;
  char buf[64];
  auto emit_law = [&](const char* name, const TemperatureLaw& law) {
    out += name;
    out += '=';
    for (double c : law.coefficients()) {
      std::snprintf(buf, sizeof buf, "%a,", c);
      out += buf;
    }
    out += ';';
  };
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    out += "phase:";
    out += to_string(static_cast<Phase>(p));
    out += '{';
    if (phases_[p]) {
      emit_law("rho", phases_[p]->rho);
      emit_law("c", phases_[p]->c);
      emit_law("k", phases_[p]->k);
      emit_law("sigma", phases_[p]->sigma);
    }
    out += '}';
  }
  return out;
}

MaterialLaw MaterialLaw::benchmark_composite() {
  MaterialLaw law;
  law.set(Phase::matrix, PhaseLaw{TemperatureLaw::constant(0.008), TemperatureLaw::constant(562.5),
                                  TemperatureLaw::affine(4.0, 0.0004),
                                  TemperatureLaw::affine(300.0, -0.015)});
  law.set(Phase::inclusion, PhaseLaw{TemperatureLaw::constant(0.002), TemperatureLaw::constant(750.0),
                                     TemperatureLaw::affine(0.04, 0.000004),
                                     TemperatureLaw::affine(0.075, -0.00001)});
  return law;
}

MaterialLaw MaterialLaw::homogeneous(const PhaseLaw& law) {
  MaterialLaw out;
  out.set(Phase::matrix, law);
  out.set(Phase::inclusion, law);
  return out;
}

EllipticityBounds ellipticity_bounds(const MaterialLaw& law, const TemperatureRange& range) {
  if (!(range.hi >= range.lo)) {
    throw Error(ErrorCode::invalid_config, "empty temperature range");
  }
  double lower = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    const auto phase = static_cast<Phase>(p);
    if (!law.has(phase)) {
      continue;
    }
    any = true;
    const auto& pl = law.at(phase);
    for (const TemperatureLaw* l : {&pl.k, &pl.sigma}) {
      const auto [mn, mx] = l->range(range.lo, range.hi);
      lower = std::min(lower, mn);
      upper = std::max(upper, mx);
    }
  }
  if (!any) {
    throw Error(ErrorCode::unknown_phase, "material law defines no phase");
  }
  if (!(lower > 0.0)) {
    throw Error(ErrorCode::non_elliptic_material,
                "conductivity lower bound " + std::to_string(lower) + " is not positive");
  }
  return {lower, upper};
}

void validate_material(const MaterialLaw& law, const TemperatureRange& range) {
  (void)ellipticity_bounds(law, range);
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    const auto phase = static_cast<Phase>(p);
    if (!law.has(phase)) {
      continue;
    }
    const auto& pl = law.at(phase);
    if (!(pl.rho.range(range.lo, range.hi).first > 0.0) || !(pl.c.range(range.lo, range.hi).first > 0.0)) {
      throw Error(ErrorCode::non_elliptic_material,
                  "density and specific heat must stay positive for phase " + std::string(to_string(phase)));
    }
  }
}

}  // namespace homs
