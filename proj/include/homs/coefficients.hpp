#pragma once

#include "homs/mesh.hpp"

namespace homs {

/// Effective coefficients of the composite at one temperature.
struct HomogenizedCoefficients {
  double u0 = 0.0;
  double S_hat = 0.0;
  Mat2 k_hat = Mat2::Zero();
  Mat2 sigma_hat = Mat2::Zero();
  Mat2 sigma_hat_star = Mat2::Zero();

  [[nodiscard]] bool computed() const { return S_hat > 0.0; }
};

}  // namespace homs
