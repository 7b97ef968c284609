#pragma once

#include "homs/cell_solver.hpp"
#include "homs/coefficients.hpp"
#include "homs/materials.hpp"

namespace homs {

/// Cell averages of the effective integrands with element-centroid gradient samples.
/// Throws ErrorCode::provenance when `first` was solved on another mesh or temperature.
[[nodiscard]] HomogenizedCoefficients compute_homogenized(const Mesh& mesh, const MaterialLaw& law, double u0,
                                                          const FirstOrderFields& first);

struct IdentityReport {
  double residual = 0.0;
  bool pass = false;
};

/// Relative Frobenius distance between the Joule-heating tensor and the
/// electric conductivity tensor.
[[nodiscard]] IdentityReport check_sigma_star_identity(const HomogenizedCoefficients& h, double tol);

struct EllipticityReport {
  bool pass = false;
  Eigen::Vector2d k_eigenvalues = Eigen::Vector2d::Zero();
  Eigen::Vector2d sigma_eigenvalues = Eigen::Vector2d::Zero();
};

/// Eigenvalues of a symmetric 2x2 tensor in ascending order.
/// Throws ErrorCode::invalid_tensor when the tensor is not symmetric to 1e-10 relative.
[[nodiscard]] Eigen::Vector2d symmetric_eigenvalues(const Mat2& t);

[[nodiscard]] bool eigenvalues_within(const Mat2& t, const EllipticityBounds& bounds);

[[nodiscard]] EllipticityReport check_ellipticity(const HomogenizedCoefficients& h, const EllipticityBounds& bounds);

}  // namespace homs
