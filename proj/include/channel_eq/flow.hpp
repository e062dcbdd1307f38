#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "channel_eq/fem.hpp"

namespace channel_eq {

struct SolveConfig {
  double R = 0.0;
  double lambda = 0.0;
  double newton_tol = 1e-10;  // relative to max(1, norm of the Stokes load)
  int max_newton = 25;
  int picard_warmup = 3;
  // Default ceil(R / 0.5), at least 1.
  std::optional<int> continuation_steps;
  // Cap on Picard plus Newton iterations over the whole continuation.
  int max_total_iterations = 200;

  void validate() const;  // ConfigError
  int steps() const;
};

struct IterationRecord {
  double R = 0.0;
  bool newton = false;
  double residual = 0.0;
  bool accepted = true;
};

struct SolveReport {
  std::vector<IterationRecord> history;
  double residual = 0.0;        // final absolute residual
  double tolerance = 0.0;       // absolute tolerance used
  int iterations = 0;
  int factorizations = 0;
  int retries = 0;              // continuation increments halved
  // Set when the residual stalled within 100x of the tolerance; the field
  // is returned but flagged.
  bool warning = false;
};

struct LiftAux {};
struct TorqueAux {};
using AuxKind = std::variant<LiftAux, TorqueAux>;

std::string to_string(const AuxKind& kind);

// lambda (L^2 - x2^2) e1.
VelocityDatum poiseuille(double lambda, double L);
// Poiseuille on Inflow and Outflow, zero on Wall and Obstacle.
BoundaryData flow_boundary_data(double lambda, double L);
// Obstacle datum e2 (lift) or (-x2, x1) (torque), zero elsewhere.
BoundaryData aux_boundary_data(const AuxKind& kind);

// Discrete momentum residual A u + B^T p + R c(u; u, .) over every velocity
// dof, constrained ones included.
Vector momentum_residual(const Field& field, double R);

// Problem workspace on one mesh: holds assembled blocks and the reusable
// factorization. Not thread-safe; use one instance per thread.
class FlowProblem {
 public:
  // The mesh must carry its channel geometry (Mesh::domain).
  explicit FlowProblem(std::shared_ptr<const DofMap> dofs);
  ~FlowProblem();

  const std::shared_ptr<const DofMap>& dofs() const { return dofs_; }
  const DomainSpec& domain() const { return domain_; }

  Field stokes(double lambda);
  Field aux(const AuxKind& kind);
  // Continuation from Stokes (or `initial`) to cfg.R. Throws NoConvergence.
  Field navier_stokes(const SolveConfig& cfg, SolveReport* report = nullptr,
                      const Field* initial = nullptr);

  // Euclidean norm of the residual over unconstrained velocity rows and all
  // continuity rows.
  double residual_norm(const Field& field, double R) const;
  int factorizations() const;

 private:
  void factor_stokes();
  Vector residual(const Vector& u, const Vector& p, double R) const;

  std::shared_ptr<const DofMap> dofs_;
  DomainSpec domain_;
  SpMat A_, B_;
  std::vector<char> mask_;
  std::unique_ptr<fem::SaddleSolver> solver_;
  bool stokes_factored_ = false;
};

Field solve_stokes(std::shared_ptr<const DofMap> dofs, double lambda);
Field solve_navier_stokes(std::shared_ptr<const DofMap> dofs, const SolveConfig& cfg,
                          SolveReport* report = nullptr);
Field solve_aux_w(std::shared_ptr<const DofMap> dofs, const AuxKind& kind);

// Smooth cutoff: 0 for |x1| <= 3d, 1 for |x1| >= 4d, quintic blend between.
double cutoff(double x1, double d);

// Discrete solenoidal extension of lambda=1 Poiseuille flow that vanishes near
// the obstacle: I(cutoff * Poiseuille) minus a correction z supported on the
// sub-mesh Sigma, with B z = B I(cutoff * Poiseuille) and z = 0 on the
// boundary of Sigma. Translation: Sigma is the two columns 2d < |x1| < 4d
// joined by the strip |x1| < 2d below extension_strip_level(L) (above its
// mirror for h < 0). Rotation (b): Sigma is |x1| < 4d outside the disk of
// radius rotation_disk_radius(d, L). The mesh must contain the cut lines
// generate_mesh inserts.
Field build_extension_a(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec);
Field build_extension_b(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec);
// Dispatches on the state's mode.
Field build_extension(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec);

}  // namespace channel_eq
