#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "channel_eq/geometry.hpp"

namespace channel_eq::detail {

// Planar straight-line graph: boundary points, tagged segments between them,
// and one seed point inside every hole.
struct Pslg {
  struct Segment {
    int a = 0;
    int b = 0;
    int tag = 0;
  };
  std::vector<Vec2> points;
  std::vector<Segment> segments;
  std::vector<Vec2> holes;
};

struct RefineOptions {
  // Circumradius / shortest edge bound; sqrt(2) gives angles >= 20.7 deg.
  double max_radius_edge_ratio = 1.4142135623730951;
  // Target edge length at a point.
  std::function<double(Vec2)> size;
  // Subsegments and triangle edges shorter than this are never created.
  double min_length = 1e-4;
  std::size_t max_vertices = 4'000'000;
  // Paired segments: splitting a subsegment tagged twin_tag also splits the
  // subsegment joining the twin_map images of its endpoints, if present.
  // twin_map must be an exact involution (e.g. negation).
  int twin_tag = -1;
  std::function<Vec2(Vec2)> twin_map;
};

struct Triangulation {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<Pslg::Segment> boundary;        // subsegments, tag preserved
};

// Conforming constrained Delaunay refinement of the region bounded by the
// segments. Input segments are first subdivided according to `size`, then
// encroached subsegments and skinny or oversized triangles are split.
// Throws MeshFailure when the length floor or vertex budget is hit.
Triangulation refine_pslg(const Pslg& input, const RefineOptions& options);

}  // namespace channel_eq::detail
