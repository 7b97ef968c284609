#include "homs/homogenizer.hpp"

#include <cmath>

#include "homs/error.hpp"

namespace homs {

HomogenizedCoefficients compute_homogenized(const Mesh& mesh, const MaterialLaw& law, double u0,
                                            const FirstOrderFields& first) {
  if (first.mesh_id != mesh.id()) {
    throw Error(ErrorCode::provenance, "cell fields were solved on a different mesh");
  }
  if (first.u0 != u0) {
    throw Error(ErrorCode::provenance, "cell fields were solved at u0 = " + std::to_string(first.u0) +
                                           ", requested " + std::to_string(u0));
  }
  const auto samples = sample_elements(mesh, law, u0);
  std::array<std::vector<Vec2>, 2> gradM;
  std::array<std::vector<Vec2>, 2> gradN;
  for (int a = 0; a < 2; ++a) {
    gradM[a] = element_gradients(mesh, first.M[a]);
    gradN[a] = element_gradients(mesh, first.N[a]);
  }

  HomogenizedCoefficients h;
  h.u0 = u0;
  double S = 0.0;
  Mat2 k = Mat2::Zero();
  Mat2 sigma = Mat2::Zero();
  Mat2 star = Mat2::Zero();
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const double area = mesh.geometry()[e].area;
    const auto& s = samples[e];
    S += area * s.heat_capacity();
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double delta = i == j ? 1.0 : 0.0;
        k(i, j) += area * (s.k * delta + s.k * gradM[j][e][i]);
        sigma(i, j) += area * (s.sigma * delta + s.sigma * gradN[j][e][i]);
        star(i, j) += area * (s.sigma * delta + s.sigma * gradN[j][e][i] + s.sigma * gradN[i][e][j] +
                              s.sigma * gradN[i][e].dot(gradN[j][e]));
      }
    }
  }
  const double volume = mesh.total_area();
  h.S_hat = S / volume;
  h.k_hat = k / volume;
  h.sigma_hat = sigma / volume;
  h.sigma_hat_star = star / volume;
  return h;
}

IdentityReport check_sigma_star_identity(const HomogenizedCoefficients& h, double tol) {
  IdentityReport r;
  const double scale = h.sigma_hat.norm();
  const double diff = (h.sigma_hat_star - h.sigma_hat).norm();
  r.residual = scale > 0.0 ? diff / scale : diff;
  r.pass = r.residual <= tol;
  return r;
}

Eigen::Vector2d symmetric_eigenvalues(const Mat2& t) {
  const double scale = t.cwiseAbs().maxCoeff();
  if (std::abs(t(0, 1) - t(1, 0)) > 1e-10 * scale) {
    throw Error(ErrorCode::invalid_tensor, "tensor is not symmetric");
  }
  const double off = 0.5 * (t(0, 1) + t(1, 0));
  const double mean = 0.5 * (t(0, 0) + t(1, 1));
  const double half_gap = std::hypot(0.5 * (t(0, 0) - t(1, 1)), off);
  return {mean - half_gap, mean + half_gap};
}

bool eigenvalues_within(const Mat2& t, const EllipticityBounds& bounds) {
  const auto ev = symmetric_eigenvalues(t);
  const double slack = 1e-12 * std::max(std::abs(bounds.upper), 1.0);
  return ev[0] >= bounds.lower - slack && ev[1] <= bounds.upper + slack;
}

EllipticityReport check_ellipticity(const HomogenizedCoefficients& h, const EllipticityBounds& bounds) {
  EllipticityReport r;
  r.k_eigenvalues = symmetric_eigenvalues(h.k_hat);
  r.sigma_eigenvalues = symmetric_eigenvalues(h.sigma_hat);
  r.pass = eigenvalues_within(h.k_hat, bounds) && eigenvalues_within(h.sigma_hat, bounds);
  return r;
}

}  // namespace homs
