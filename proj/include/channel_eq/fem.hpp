#pragma once

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "channel_eq/mesh.hpp"

namespace channel_eq {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

// P2 velocity / P1 pressure numbering. Velocity nodes are the mesh vertices
// followed by one node per edge; velocity dof (c, node) is c * Nv + node.
// Pressure dofs are the vertices.
struct DofMap {
  std::shared_ptr<const Mesh> mesh;
  int num_vertices = 0;
  int num_edges = 0;
  std::vector<std::array<int, 2>> edges;
  // Per triangle: 3 vertices, then edge nodes of (v0,v1), (v1,v2), (v2,v0).
  std::vector<std::array<int, 6>> cells;
  std::vector<Vec2> node_points;
  // Boundary tag of each velocity node, -1 for interior nodes. Wall wins at
  // corners shared with inflow or outflow.
  std::vector<int> node_tag;
  std::array<std::vector<int>, 4> tag_nodes;

  int velocity_nodes() const { return num_vertices + num_edges; }
  int velocity_dofs() const { return 2 * velocity_nodes(); }
  int pressure_dofs() const { return num_vertices; }
  int total_dofs() const { return velocity_dofs() + pressure_dofs(); }
  int vdof(int component, int node) const { return component * velocity_nodes() + node; }
  // Edge node joining vertices a and b, or -1.
  int edge_node(int a, int b) const;

  std::unordered_map<std::uint64_t, int> edge_index;
};

std::shared_ptr<const DofMap> build_spaces(std::shared_ptr<const Mesh> mesh);
std::shared_ptr<const DofMap> build_spaces(const Mesh& mesh);

struct FieldMeta {
  double R = 0.0;
  double lambda = 0.0;
  std::optional<ObstacleState> state;
  std::string label;
};

struct Field {
  std::shared_ptr<const DofMap> dofs;
  Vector u;  // velocity_dofs()
  Vector p;  // pressure_dofs()
  FieldMeta meta;

  Vec2 velocity_at(int node) const {
    const int nv = dofs->velocity_nodes();
    return {u[node], u[nv + node]};
  }
};

Field zero_field(std::shared_ptr<const DofMap> dofs);
// Nodal interpolant of a vector function; pressure left at zero.
Field interpolate(std::shared_ptr<const DofMap> dofs, const std::function<Vec2(Vec2)>& fn);

namespace fem {

struct QuadPoint {
  double l0, l1, l2, w;  // barycentrics, weight (sums to 1)
};
// Degree-5 seven-point rule.
extern const std::array<QuadPoint, 7> kTriangleRule;

struct ElementGeom {
  std::array<Vec2, 3> x;
  std::array<Vec2, 3> grad_lambda;
  double area = 0.0;
};
ElementGeom element_geometry(const DofMap& dofs, int t);

struct P2Basis {
  std::array<double, 6> N;
  std::array<Vec2, 6> dN;
};
P2Basis p2_basis(const ElementGeom& g, double l0, double l1, double l2);

// Velocity value and gradient G(i,j) = d u_i / d x_j at a point of cell t.
struct VelocitySample {
  Vec2 value;
  std::array<double, 4> grad;  // G00, G01, G10, G11
};
VelocitySample sample_velocity(const DofMap& dofs, const Vector& u, int t, const P2Basis& b);

// Integrates fn(x, basis, weight*area) over every quadrature point.
void for_each_quadrature_point(
    const DofMap& dofs, const std::function<void(int t, Vec2 x, const P2Basis&, double w)>& fn);

}  // namespace fem

// Vector Laplacian block: A(ci, dj) = delta_cd int grad(phi_i) . grad(phi_j).
SpMat assemble_viscous(const DofMap& dofs);
// B(q, j) = -int q div(phi_j).
SpMat assemble_divergence(const DofMap& dofs);
// int f . phi_i.
Vector assemble_load(const DofMap& dofs, const std::function<Vec2(Vec2)>& f);
// int q_i, the pressure-mean functional.
Vector pressure_weights(const DofMap& dofs);
double pressure_mean(const Field& f);

// Skew-symmetric trilinear form 1/2 int (u.grad v).phi - 1/2 int (u.grad phi).v.
double convection_form(const Field& u, const Field& v, const Field& phi);
// Vector of convection_form(u, v, phi_i) over velocity basis functions phi_i.
Vector convection_vector(const DofMap& dofs, const Vector& u, const Vector& v);

using VelocityDatum = std::function<Vec2(Vec2)>;
using BoundaryData = std::map<BoundaryTag, VelocityDatum>;

struct SaddleSystem {
  std::shared_ptr<const DofMap> dofs;
  SpMat A;                  // velocity block
  SpMat B;                  // divergence block
  std::optional<SpMat> N;   // convection linearization added to A
  Vector f;                 // velocity right-hand side
  Vector g;                 // pressure right-hand side (B u = g)
  // Filled by apply_dirichlet.
  std::vector<char> constrained;
  Vector constrained_values;
  bool has_constraints = false;
};

SaddleSystem make_stokes_system(std::shared_ptr<const DofMap> dofs);
// Fixes every boundary velocity node to the datum of its tag. Throws
// MissingTag if a tag that occurs on the mesh has no datum.
SaddleSystem apply_dirichlet(SaddleSystem system, const BoundaryData& bc);
// Sparse direct solve; pressure normalized to zero mean. Throws
// SingularSystem on factorization failure or excessive residual.
Field solve_saddle(const SaddleSystem& system);

namespace fem {

// Reusable factorization of [[V, B^T], [B, 0]] with velocity constraints and
// one pinned pressure dof per connected component.
class SaddleSolver {
 public:
  SaddleSolver(std::shared_ptr<const DofMap> dofs, std::vector<char> constrained);
  ~SaddleSolver();
  SaddleSolver(const SaddleSolver&) = delete;
  SaddleSolver& operator=(const SaddleSolver&) = delete;

  // Full 2x2 component block pattern; velocity blocks passed to factorize
  // must use (a subset of) this pattern.
  const SpMat& velocity_pattern() const { return vpattern_; }
  void factorize(const SpMat& velocity_block, const SpMat& B);
  // Solves with constrained velocity dofs set to `values` (entries of
  // unconstrained dofs ignored). Pressure returned with zero mean.
  void solve(const Vector& f, const Vector& g, const Vector& values, Vector& u, Vector& p) const;
  int factorizations() const { return factorizations_; }

 private:
  struct Impl;
  std::shared_ptr<const DofMap> dofs_;
  std::vector<char> constrained_;
  std::vector<int> pinned_;     // one pressure dof per component
  SpMat vpattern_;
  SpMat K_;       // unconstrained
  SpMat Kc_;      // constrained
  std::vector<int> component_;  // pressure component of each vertex
  std::unique_ptr<Impl> impl_;
  Vector weights_;
  int factorizations_ = 0;
  bool analyzed_ = false;
};

// Adds R-scaled convection linearization about u0 into `block` (which must
// carry the full velocity pattern). Newton includes both derivative terms,
// Picard only the transport term.
enum class Linearization { Picard, Newton };
void add_convection(const DofMap& dofs, const Vector& u0, double scale, Linearization kind,
                    SpMat& block);

// dst += src where src's pattern lies inside dst's (DofMismatch otherwise).
void accumulate(const SpMat& src, SpMat& dst);

// Constraint mask from boundary tags: all tagged velocity dofs.
std::vector<char> boundary_mask(const DofMap& dofs);
// Constrained values from per-tag data (velocity-dof sized vector).
Vector boundary_values(const DofMap& dofs, const BoundaryData& bc);

}  // namespace fem

}  // namespace channel_eq
