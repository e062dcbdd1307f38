#include "channel_eq/forces.hpp"

#include <algorithm>
#include <cmath>

#include "channel_eq/errors.hpp"
#include "channel_eq/flow.hpp"

namespace channel_eq {

std::string to_string(ForceKind kind) { return kind == ForceKind::Lift ? "lift" : "torque"; }

double ForceResult::relative_discrepancy(double floor) const {
  return discrepancy / std::max(std::abs(volume_value), floor);
}

namespace {

double paired_residual(const Field& u, ForceKind kind, NormalOrientation orientation) {
  if (!u.dofs) throw DofMismatch("field without dof map");
  const DofMap& dm = *u.dofs;
  if (u.u.size() != dm.velocity_dofs() || u.p.size() != dm.pressure_dofs())
    throw DofMismatch("field vectors do not match their dof map");
  const Vector F = momentum_residual(u, u.meta.R);
  const int nv = dm.velocity_nodes();
  double sum = 0.0;
  for (int n : dm.tag_nodes[static_cast<int>(BoundaryTag::Obstacle)]) {
    const Vec2 x = dm.node_points[n];
    if (kind == ForceKind::Lift)
      sum += F[nv + n];
    else
      sum += -x.y * F[n] + x.x * F[nv + n];
  }
  return orientation == NormalOrientation::IntoObstacle ? sum : -sum;
}

double transport_integral(const Field& u, const Field& w, double R) {
  if (u.dofs != w.dofs) throw DofMismatch("volume force: u and w live on different dof maps");
  if (R == 0.0) return 0.0;
  const DofMap& dm = *u.dofs;
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(dm.cells.size()); ++t) {
    const auto g = fem::element_geometry(dm, t);
    for (const auto& q : fem::kTriangleRule) {
      const auto b = fem::p2_basis(g, q.l0, q.l1, q.l2);
      const auto U = fem::sample_velocity(dm, u.u, t, b);
      const auto W = fem::sample_velocity(dm, w.u, t, b);
      const double cx = U.value.x * U.grad[0] + U.value.y * U.grad[1];
      const double cy = U.value.x * U.grad[2] + U.value.y * U.grad[3];
      sum += q.w * g.area * (cx * W.value.x + cy * W.value.y);
    }
  }
  return R * sum;
}

}  // namespace

double lift_boundary(const Field& u, NormalOrientation orientation) {
  return paired_residual(u, ForceKind::Lift, orientation);
}

double torque_boundary(const Field& u, NormalOrientation orientation) {
  return paired_residual(u, ForceKind::Torque, orientation);
}

double lift_volume(const Field& u, const Field& w, double R) { return transport_integral(u, w, R); }

double torque_volume(const Field& u, const Field& w, double R) { return transport_integral(u, w, R); }

ForceResult evaluate_force(const Field& u, const Field& w, ForceKind kind) {
  ForceResult r;
  r.kind = kind;
  const double R = u.meta.R;
  if (kind == ForceKind::Lift) {
    r.boundary_value = lift_boundary(u);
    r.volume_value = lift_volume(u, w, R);
  } else {
    r.boundary_value = torque_boundary(u);
    r.volume_value = torque_volume(u, w, R);
  }
  r.discrepancy = std::abs(r.boundary_value - r.volume_value);
  r.provenance = {R, u.meta.lambda, u.meta.state, longest_edge(*u.dofs->mesh)};
  return r;
}

double gradient_norm(const Field& f) {
  const DofMap& dm = *f.dofs;
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(dm.cells.size()); ++t) {
    const auto g = fem::element_geometry(dm, t);
    for (const auto& q : fem::kTriangleRule) {
      const auto b = fem::p2_basis(g, q.l0, q.l1, q.l2);
      const auto U = fem::sample_velocity(dm, f.u, t, b);
      double s = 0.0;
      for (double v : U.grad) s += v * v;
      sum += q.w * g.area * s;
    }
  }
  return std::sqrt(sum);
}

double perturbation_norm(const Field& u, const Field& a, double lambda) {
  if (u.dofs != a.dofs) throw DofMismatch("perturbation_norm: fields on different dof maps");
  Field diff = u;
  diff.u -= lambda * a.u;
  return gradient_norm(diff);
}

double orthogonality_check(const Field& u, const Field& w) {
  if (u.dofs != w.dofs) throw DofMismatch("orthogonality_check: fields on different dof maps");
  return w.u.dot(assemble_viscous(*u.dofs) * u.u);
}

double divergence_norm(const Field& f) { return (assemble_divergence(*f.dofs) * f.u).norm(); }

double longest_edge(const Mesh& mesh) {
  double h = 0.0;
  for (const auto& t : mesh.triangles)
    for (int i = 0; i < 3; ++i) h = std::max(h, norm(mesh.nodes[t[i]] - mesh.nodes[t[(i + 1) % 3]]));
  return h;
}

}  // namespace channel_eq
