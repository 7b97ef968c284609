#pragma once

#include <string>
#include <vector>

#include "homs/fem.hpp"
#include "homs/macro_solver.hpp"
#include "homs/mesh.hpp"
#include "homs/offline_store.hpp"

namespace homs {

enum class ReconstructionOrder { homogenized, loms, homs };

[[nodiscard]] ReconstructionOrder parse_reconstruction_order(const std::string& text);
[[nodiscard]] std::string_view to_string(ReconstructionOrder order);

/// Macro fields and their derivatives at one point.
struct MacroPoint {
  double u = 0.0;
  double phi = 0.0;
  double du_dt = 0.0;
  Vec2 grad_u = Vec2::Zero();
  Vec2 grad_phi = Vec2::Zero();
  Mat2 hess_u = Mat2::Zero();
  Mat2 hess_phi = Mat2::Zero();
};

/// Macro fields at one time level with derivatives recovered on the coarse
/// mesh: gradients by element averaging, second derivatives by averaging the
/// recovered gradients again.
class MacroSnapshot {
 public:
  /// Backward difference in time, forward at the initial level.
  MacroSnapshot(const Mesh& coarse, const MacroTrajectory& trajectory, int time_index);
  MacroSnapshot(const Mesh& coarse, Vector u, Vector phi, Vector du_dt);

  [[nodiscard]] MacroPoint at(const Vec2& x) const;
  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }

 private:
  void recover();

  const Mesh* mesh_;
  Vector u_;
  Vector phi_;
  Vector du_dt_;
  GradientField grad_u_;
  GradientField grad_phi_;
  std::vector<Mat2> hess_u_;
  std::vector<Mat2> hess_phi_;
};

struct PointValues {
  double u = 0.0;
  double phi = 0.0;
};

/// Multiscale expansion at one point given its macro data and cell coordinate y.
[[nodiscard]] PointValues reconstruct_point(const OfflineTable& table, const MacroPoint& macro, const Vec2& y,
                                            double epsilon, ReconstructionOrder order);

struct ReconstructedFields {
  Vector u;
  Vector phi;
  MeshId mesh_id;
  ReconstructionOrder order = ReconstructionOrder::homogenized;
  int time_index = 0;
};

/// Evaluates the expansion at every node of `eval_mesh`. Throws
/// ErrorCode::interpolation for nodes outside the coarse mesh.
[[nodiscard]] ReconstructedFields reconstruct(const MacroSnapshot& macro, const OfflineTable& table,
                                              const Mesh& eval_mesh, double epsilon, ReconstructionOrder order);

struct ReconstructionRequest {
  double epsilon = 0.0;
  ReconstructionOrder order = ReconstructionOrder::homs;
  const Mesh* eval_mesh = nullptr;
  int time_index = 0;
};

[[nodiscard]] ReconstructedFields reconstruct(const Mesh& coarse, const MacroTrajectory& trajectory,
                                              const OfflineTable& table, const ReconstructionRequest& request);

}  // namespace homs
