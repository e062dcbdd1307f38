#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "channel_eq/geometry.hpp"

namespace channel_eq {

enum class BoundaryTag { Wall, Inflow, Outflow, Obstacle };

inline constexpr std::array<BoundaryTag, 4> kAllTags{BoundaryTag::Wall, BoundaryTag::Inflow,
                                                     BoundaryTag::Outflow, BoundaryTag::Obstacle};

std::string to_string(BoundaryTag tag);
BoundaryTag parse_tag(const std::string& text);

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::Wall;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  double min_angle_deg = 0.0;
  // Set for channel meshes; absent for generic meshes (unit squares, files).
  std::optional<DomainSpec> domain;
};

struct MeshOptions {
  double target_h = 0.1;
  // Element size at the walls and the obstacle, relative to target_h.
  double grading = 0.25;
};

// Conforming triangulation of [-X,X] x [-L,L] minus the obstacle, refined
// to min angle > 20 degrees. Negative positions are meshed as the mirror
// image of the positive one, so +/- pairs are exact reflections. With
// `symmetrize` at position 0 one quadrant is meshed and reflected in both
// axes; at Translation(h != 0) the right half is reflected in x1 = 0; at
// Rotation(theta != 0) the right half is point-reflected through the origin.
Mesh generate_mesh(const DomainSpec& spec, double target_h, double grading);
inline Mesh generate_mesh(const DomainSpec& spec, const MeshOptions& opt) {
  return generate_mesh(spec, opt.target_h, opt.grading);
}

// Target element size used by generate_mesh at point p.
double mesh_size_at(const DomainSpec& spec, double target_h, double grading, Vec2 p);

// Structured nx-by-ny rectangle split into right triangles with alternating
// diagonals. Left/right sides are tagged Inflow/Outflow, top/bottom Wall.
Mesh rectangle_mesh(double x0, double x1, double y0, double y1, int nx, int ny);

// Unstructured quasi-uniform Delaunay mesh of a rectangle with element size
// h, tagged like rectangle_mesh.
Mesh rectangle_mesh_unstructured(double x0, double x1, double y0, double y1, double h);

// Red refinement: every triangle split into four through its edge midpoints.
Mesh refine_uniform(const Mesh& mesh);
// Red refinement of every triangle touching a disk of `radius` around one of
// `centers`, with green bisection closing hanging nodes.
Mesh refine_near(const Mesh& mesh, const std::vector<Vec2>& centers, double radius);
// Uniform refinement followed by one extra local level at the obstacle
// corners, so that corner elements shrink fourfold per step. Needs
// Mesh::domain.
Mesh refine_channel(const Mesh& mesh, double corner_radius);

double triangle_area(const Mesh& mesh, int t);
double mesh_area(const Mesh& mesh);
double compute_min_angle_deg(const Mesh& mesh);

struct MeshAudit {
  bool boundary_edges_single_owner = true;
  double area = 0.0;
  double min_angle_deg = 0.0;
  double obstacle_loop_length = 0.0;
  int obstacle_loops = 0;
  double max_obstacle_node_distance = 0.0;
};

MeshAudit audit_mesh(const Mesh& mesh);

// `mesh2d v1` text format.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

}  // namespace channel_eq
