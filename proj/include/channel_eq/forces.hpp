#pragma once

#include <optional>
#include <string>

#include "channel_eq/fem.hpp"

namespace channel_eq {

enum class ForceKind { Lift, Torque };
std::string to_string(ForceKind kind);

// Normal used on the obstacle boundary. The default points into the
// obstacle, the orientation in which lift_boundary equals lift_volume.
enum class NormalOrientation { IntoObstacle, OutOfObstacle };

struct ForceProvenance {
  double R = 0.0;
  double lambda = 0.0;
  std::optional<ObstacleState> state;
  double mesh_size = 0.0;  // longest mesh edge
};

struct ForceResult {
  double boundary_value = 0.0;
  double volume_value = 0.0;
  double discrepancy = 0.0;  // |boundary_value - volume_value|
  ForceKind kind = ForceKind::Lift;
  ForceProvenance provenance;

  // discrepancy / max(|volume_value|, floor).
  double relative_discrepancy(double floor) const;
};

// Consistent-flux evaluation: the momentum residual of (u, p) at R = u.meta.R,
// taken over all velocity dofs, paired with the nodal lifting of e2 (lift)
// or (-x2, x1) (torque) on the obstacle nodes.
double lift_boundary(const Field& u, NormalOrientation orientation = NormalOrientation::IntoObstacle);
double torque_boundary(const Field& u, NormalOrientation orientation = NormalOrientation::IntoObstacle);

// R * int (u . grad u) . w with the seven-point rule; exactly 0 for R = 0.
double lift_volume(const Field& u, const Field& w, double R);
double torque_volume(const Field& u, const Field& w, double R);

// Both values for u with the matching auxiliary field w.
ForceResult evaluate_force(const Field& u, const Field& w, ForceKind kind);

// sqrt(int |grad u|^2) over the velocity.
double gradient_norm(const Field& f);
// sqrt(int |grad(u - lambda a)|^2): distance of u from its far-field
// extension lambda a. u and a must share a dof map.
double perturbation_norm(const Field& u, const Field& a, double lambda);
// int grad w : grad u.
double orthogonality_check(const Field& u, const Field& w);
// Euclidean norm of the discrete divergence B u.
double divergence_norm(const Field& f);
double longest_edge(const Mesh& mesh);

}  // namespace channel_eq
