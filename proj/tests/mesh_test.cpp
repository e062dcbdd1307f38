#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "channel_eq/errors.hpp"
#include "channel_eq/mesh.hpp"

using namespace channel_eq;

namespace {

DomainSpec channel(ObstacleState s, bool symmetrize = false) {
  DomainSpec spec;
  spec.state = s;
  spec.symmetrize = symmetrize;
  return spec;
}

// Oracle: channel area minus obstacle area.
double exact_area(const DomainSpec& s) { return 4.0 * s.L * s.X - 4.0 * s.d; }

std::set<std::pair<double, double>> node_set(const Mesh& m) {
  std::set<std::pair<double, double>> out;
  for (const Vec2& p : m.nodes) out.insert({p.x, p.y});
  return out;
}

bool invariant_under(const Mesh& m, double sx, double sy) {
  const auto nodes = node_set(m);
  for (const Vec2& p : m.nodes) {
    const double x = sx * p.x == 0.0 ? 0.0 : sx * p.x;
    const double y = sy * p.y == 0.0 ? 0.0 : sy * p.y;
    if (!nodes.count({x, y})) return false;
  }
  return true;
}

void expect_valid(const Mesh& m) {
  const MeshAudit a = audit_mesh(m);
  const DomainSpec& s = *m.domain;
  EXPECT_TRUE(a.boundary_edges_single_owner);
  EXPECT_NEAR(a.area, exact_area(s), 1e-10 * exact_area(s));
  EXPECT_GE(a.min_angle_deg, 20.0);
  EXPECT_EQ(a.obstacle_loops, 1);
  EXPECT_NEAR(a.obstacle_loop_length, 4.0 * s.d + 4.0, 1e-10);
  EXPECT_LE(a.max_obstacle_node_distance, 1e-12);
}

}  // namespace

TEST(GenerateMesh, CenteredAreaIs46) {
  const Mesh m = generate_mesh(channel(Translation{0.0}), 0.2, 0.25);
  EXPECT_NEAR(mesh_area(m), 46.0, 46.0 * 1e-10);
  expect_valid(m);
}

TEST(GenerateMesh, InvariantsOverRandomStates) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> h(-0.95, 0.95), th(-1.5, 1.5);
  for (int i = 0; i < 20; ++i) {
    const ObstacleState s = i % 2 ? ObstacleState{Translation{h(rng)}} : ObstacleState{Rotation{th(rng)}};
    SCOPED_TRACE(position_of(s));
    expect_valid(generate_mesh(channel(s, i % 4 < 2), 0.5, 0.25));
  }
}

TEST(GenerateMesh, ThinGapIsResolved) {
  const Mesh m = generate_mesh(channel(Translation{0.98}), 0.2, 0.25);
  expect_valid(m);
  // At least four layers across the 0.02 gap: some node strictly inside it
  // at distance < gap/2 from both the wall and the obstacle edge.
  int inside = 0;
  for (const Vec2& p : m.nodes)
    if (std::abs(p.x) < 0.5 && p.y > 1.98 + 0.004 && p.y < 2.0 - 0.004) ++inside;
  EXPECT_GT(inside, 0);
}

TEST(GenerateMesh, BoundarySizeFollowsGrading) {
  const double H = 0.4, g = 0.25;
  const Mesh m = generate_mesh(channel(Translation{0.2}), H, g);
  for (const auto& e : m.boundary_edges) {
    if (e.tag != BoundaryTag::Obstacle && e.tag != BoundaryTag::Wall) continue;
    EXPECT_LE(norm(m.nodes[e.a] - m.nodes[e.b]), g * H * (1.0 + 1e-9));
  }
}

TEST(GenerateMesh, MirrorSymmetricAtTheCenter) {
  const Mesh t = generate_mesh(channel(Translation{0.0}, true), 0.3, 0.25);
  EXPECT_TRUE(invariant_under(t, 1.0, -1.0));
  EXPECT_TRUE(invariant_under(t, -1.0, 1.0));
  const Mesh r = generate_mesh(channel(Rotation{0.0}, true), 0.3, 0.25);
  EXPECT_TRUE(invariant_under(r, -1.0, -1.0));
}

TEST(GenerateMesh, OffCenterSymmetrization) {
  const Mesh t = generate_mesh(channel(Translation{0.4}, true), 0.3, 0.25);
  expect_valid(t);
  EXPECT_TRUE(invariant_under(t, -1.0, 1.0));
  EXPECT_FALSE(invariant_under(t, 1.0, -1.0));
  // 0.5 and 0.55 put an obstacle corner next to the x2 axis.
  for (double theta : {0.3, 0.5, 0.55, 1.1, -0.7}) {
    const Mesh r = generate_mesh(channel(Rotation{theta}, true), 0.3, 0.25);
    expect_valid(r);
    EXPECT_TRUE(invariant_under(r, -1.0, -1.0));
  }
}

TEST(GenerateMesh, NegativePositionsAreExactMirrors) {
  const Mesh p = generate_mesh(channel(Rotation{0.6}), 0.4, 0.25);
  const Mesh n = generate_mesh(channel(Rotation{-0.6}), 0.4, 0.25);
  ASSERT_EQ(p.nodes.size(), n.nodes.size());
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    EXPECT_EQ(p.nodes[i].x, n.nodes[i].x);
    EXPECT_EQ(p.nodes[i].y == 0.0 ? 0.0 : -p.nodes[i].y, n.nodes[i].y);
  }
}

TEST(GenerateMesh, Deterministic) {
  const DomainSpec s = channel(Rotation{0.8});
  const Mesh a = generate_mesh(s, 0.3, 0.25), b = generate_mesh(s, 0.3, 0.25);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) EXPECT_TRUE(a.nodes[i] == b.nodes[i]);
  EXPECT_EQ(a.triangles, b.triangles);
}

TEST(GenerateMesh, RejectsBadInput) {
  EXPECT_THROW(generate_mesh(channel(Translation{0.0}), 0.0, 0.25), InputError);
  EXPECT_THROW(generate_mesh(channel(Translation{0.0}), 0.2, 1.5), InputError);
  EXPECT_THROW(generate_mesh(channel(Translation{1.0}), 0.2, 0.25), CollisionError);
}

TEST(GenerateMesh, NoElementCrossesTheCutLines) {
  const Mesh m = generate_mesh(channel(Translation{0.3}), 0.3, 0.25);
  for (const auto& t : m.triangles) {
    for (double cut : {-2.0, -1.0, 1.0, 2.0}) {
      bool below = false, above = false;
      for (int v : t) {
        below |= m.nodes[v].x < cut - 1e-12;
        above |= m.nodes[v].x > cut + 1e-12;
      }
      EXPECT_FALSE(below && above);
    }
  }
}

TEST(MeshFile, RoundTripPreservesEverything) {
  const Mesh m = generate_mesh(channel(Translation{-0.3}, true), 0.4, 0.25);
  std::stringstream ss;
  write_mesh(ss, m);
  const Mesh r = read_mesh(ss);
  ASSERT_EQ(r.nodes.size(), m.nodes.size());
  for (std::size_t i = 0; i < m.nodes.size(); ++i) EXPECT_TRUE(r.nodes[i] == m.nodes[i]);
  EXPECT_EQ(r.triangles, m.triangles);
  ASSERT_EQ(r.boundary_edges.size(), m.boundary_edges.size());
  for (std::size_t i = 0; i < m.boundary_edges.size(); ++i) {
    EXPECT_EQ(r.boundary_edges[i].a, m.boundary_edges[i].a);
    EXPECT_EQ(r.boundary_edges[i].tag, m.boundary_edges[i].tag);
  }
  ASSERT_TRUE(r.domain.has_value());
  EXPECT_EQ(position_of(r.domain->state), -0.3);
}

TEST(MeshFile, RejectsGarbage) {
  std::stringstream ss("mesh2d v1\nnodes 2\n0 0\n");
  EXPECT_THROW(read_mesh(ss), InputError);
}

TEST(Refinement, UniformKeepsAreaAndQuadruples) {
  const Mesh m = generate_mesh(channel(Translation{0.5}), 0.5, 0.25);
  const Mesh r = refine_uniform(m);
  EXPECT_EQ(r.triangles.size(), 4 * m.triangles.size());
  EXPECT_NEAR(mesh_area(r), 46.0, 1e-9);
  EXPECT_EQ(r.boundary_edges.size(), 2 * m.boundary_edges.size());
  expect_valid(r);
}

TEST(Refinement, CornerRefinementIsConforming) {
  const Mesh m = generate_mesh(channel(Rotation{0.4}), 0.5, 0.25);
  const Mesh r = refine_channel(m, 0.1);
  EXPECT_GT(r.triangles.size(), 4 * m.triangles.size());
  const MeshAudit a = audit_mesh(r);
  EXPECT_TRUE(a.boundary_edges_single_owner);
  EXPECT_NEAR(a.area, 46.0, 1e-9);
  // Conformity: every interior edge is shared by exactly two triangles.
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : r.triangles)
    for (int i = 0; i < 3; ++i) ++count[{std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3])}];
  std::size_t boundary = 0;
  for (const auto& [e, c] : count) {
    EXPECT_LE(c, 2);
    boundary += c == 1;
  }
  EXPECT_EQ(boundary, r.boundary_edges.size());
}
