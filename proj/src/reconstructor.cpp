#include "homs/reconstructor.hpp"

#include "homs/error.hpp"

namespace homs {

namespace {

std::vector<Mat2> recovered_hessian(const Mesh& mesh, const GradientField& grad) {
  const auto gx = recover_gradient(mesh, component(grad, 0));
  const auto gy = recover_gradient(mesh, component(grad, 1));
  std::vector<Mat2> h(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    Mat2 m;
    m << gx[i].x(), gx[i].y(), gy[i].x(), gy[i].y();
    h[i] = 0.5 * (m + m.transpose());
  }
  return h;
}

template <typename T>
T blend3(const std::vector<T>& nodal, const std::array<int, 3>& tri, const std::array<double, 3>& w) {
  return w[0] * nodal[tri[0]] + w[1] * nodal[tri[1]] + w[2] * nodal[tri[2]];
}

double blend3(const Vector& nodal, const std::array<int, 3>& tri, const std::array<double, 3>& w) {
  return w[0] * nodal[tri[0]] + w[1] * nodal[tri[1]] + w[2] * nodal[tri[2]];
}

}  // namespace

ReconstructionOrder parse_reconstruction_order(const std::string& text) {
  if (text == "homogenized") {
    return ReconstructionOrder::homogenized;
  }
  if (text == "loms") {
    return ReconstructionOrder::loms;
  }
  if (text == "homs") {
    return ReconstructionOrder::homs;
  }
  throw Error(ErrorCode::invalid_config, "unknown reconstruction order '" + text + "'");
}

std::string_view to_string(ReconstructionOrder order) {
  switch (order) {
    case ReconstructionOrder::homogenized:
      return "homogenized";
    case ReconstructionOrder::loms:
      return "loms";
    case ReconstructionOrder::homs:
      return "homs";
  }
  return "?";
}

MacroSnapshot::MacroSnapshot(const Mesh& coarse, const MacroTrajectory& trajectory, int time_index)
    : mesh_(&coarse) {
  if (!(trajectory.mesh_id == coarse.id())) {
    throw Error(ErrorCode::provenance, "trajectory was computed on another mesh");
  }
  const int last = trajectory.completed_steps();
  if (time_index < 0 || time_index > last || time_index >= static_cast<int>(trajectory.phi.size())) {
    throw Error(ErrorCode::invalid_config, "time index " + std::to_string(time_index) + " outside the trajectory");
  }
  u_ = trajectory.u[time_index];
  phi_ = trajectory.phi[time_index];
  const double dt = trajectory.time.dt();
  if (time_index > 0) {
    du_dt_ = (trajectory.u[time_index] - trajectory.u[time_index - 1]) / dt;
  } else if (last >= 1) {
    du_dt_ = (trajectory.u[1] - trajectory.u[0]) / dt;
  } else {
    du_dt_ = Vector::Zero(u_.size());
  }
  recover();
}

MacroSnapshot::MacroSnapshot(const Mesh& coarse, Vector u, Vector phi, Vector du_dt)
    : mesh_(&coarse), u_(std::move(u)), phi_(std::move(phi)), du_dt_(std::move(du_dt)) {
  const auto n = static_cast<Eigen::Index>(coarse.node_count());
  if (u_.size() != n || phi_.size() != n || du_dt_.size() != n) {
    throw Error(ErrorCode::provenance, "macro fields do not match the coarse mesh");
  }
  recover();
}

void MacroSnapshot::recover() {
  grad_u_ = recover_gradient(*mesh_, u_);
  grad_phi_ = recover_gradient(*mesh_, phi_);
  hess_u_ = recovered_hessian(*mesh_, grad_u_);
  hess_phi_ = recovered_hessian(*mesh_, grad_phi_);
}

MacroPoint MacroSnapshot::at(const Vec2& x) const {
  const auto loc = mesh_->locate(x);
  const auto& tri = mesh_->elements()[loc.element];
  MacroPoint p;
  p.u = blend3(u_, tri, loc.bary);
  p.phi = blend3(phi_, tri, loc.bary);
  p.du_dt = blend3(du_dt_, tri, loc.bary);
  p.grad_u = blend3(grad_u_, tri, loc.bary);
  p.grad_phi = blend3(grad_phi_, tri, loc.bary);
  p.hess_u = blend3(hess_u_, tri, loc.bary);
  p.hess_phi = blend3(hess_phi_, tri, loc.bary);
  return p;
}

PointValues reconstruct_point(const OfflineTable& table, const MacroPoint& macro, const Vec2& y, double epsilon,
                              ReconstructionOrder order) {
  PointValues out{macro.u, macro.phi};
  if (order == ReconstructionOrder::homogenized) {
    return out;
  }
  const Bracket b = bracket(table, macro.u);
  const auto loc = table.cell_mesh->locate(y);
  const auto& tri = table.cell_mesh->elements()[loc.element];
  const auto& lo = table.entries[b.lo].cells;
  const auto& hi = table.entries[b.hi].cells;
  auto cell = [&](auto pick) {
    return (1.0 - b.weight) * blend3(pick(lo), tri, loc.bary) + b.weight * blend3(pick(hi), tri, loc.bary);
  };

  const Vec2& gu = macro.grad_u;
  const Vec2& gp = macro.grad_phi;
  for (int a = 0; a < 2; ++a) {
    out.u += epsilon * cell([a](const CellFunctionSet& c) -> const Vector& { return c.M[a]; }) * gu[a];
    out.phi += epsilon * cell([a](const CellFunctionSet& c) -> const Vector& { return c.N[a]; }) * gp[a];
  }
  if (order == ReconstructionOrder::loms) {
    return out;
  }

  double u2 = cell([](const CellFunctionSet& c) -> const Vector& { return c.Q; }) * macro.du_dt;
  double phi2 = 0.0;
  for (int a1 = 0; a1 < 2; ++a1) {
    for (int a2 = 0; a2 < 2; ++a2) {
      auto field = [&](FieldFamily CellFunctionSet::*family) {
        return cell([&](const CellFunctionSet& c) -> const Vector& { return (c.*family)[a1][a2]; });
      };
      u2 += field(&CellFunctionSet::M2) * macro.hess_u(a1, a2);
      u2 += (field(&CellFunctionSet::R2) + field(&CellFunctionSet::H)) * gu[a1] * gu[a2];
      u2 += field(&CellFunctionSet::G) * gp[a1] * gp[a2];
      phi2 += field(&CellFunctionSet::N2) * macro.hess_phi(a1, a2);
      phi2 += field(&CellFunctionSet::Z2) * gu[a2] * gp[a1];
      phi2 += field(&CellFunctionSet::W) * gu[a1] * gp[a2];
    }
  }
  out.u += epsilon * epsilon * u2;
  out.phi += epsilon * epsilon * phi2;
  return out;
}

ReconstructedFields reconstruct(const MacroSnapshot& macro, const OfflineTable& table, const Mesh& eval_mesh,
                                double epsilon, ReconstructionOrder order) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::invalid_config, "epsilon must be positive");
  }
  table.validate();
  const auto n = static_cast<Eigen::Index>(eval_mesh.node_count());
  ReconstructedFields out;
  out.u.resize(n);
  out.phi.resize(n);
  out.mesh_id = eval_mesh.id();
  out.order = order;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2& x = eval_mesh.nodes()[static_cast<std::size_t>(i)];
    const auto v = reconstruct_point(table, macro.at(x), micro_coords(x, epsilon), epsilon, order);
    out.u[i] = v.u;
    out.phi[i] = v.phi;
  }
  return out;
}

ReconstructedFields reconstruct(const Mesh& coarse, const MacroTrajectory& trajectory, const OfflineTable& table,
                                const ReconstructionRequest& request) {
  if (request.eval_mesh == nullptr) {
    throw Error(ErrorCode::invalid_config, "reconstruction needs an evaluation mesh");
  }
  const MacroSnapshot macro(coarse, trajectory, request.time_index);
  auto out = reconstruct(macro, table, *request.eval_mesh, request.epsilon, request.order);
  out.time_index = request.time_index;
  return out;
}

}  // namespace homs
