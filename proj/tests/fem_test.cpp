#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "channel_eq/errors.hpp"
#include "channel_eq/fem.hpp"
#include "channel_eq/flow.hpp"
#include "channel_eq/forces.hpp"
#include "channel_eq/manufactured.hpp"

using namespace channel_eq;

namespace {

Mesh single_triangle() {
  Mesh m;
  m.nodes = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{0, 1, BoundaryTag::Wall}, {1, 2, BoundaryTag::Wall}, {2, 0, BoundaryTag::Wall}};
  return m;
}

std::shared_ptr<const DofMap> unit_square(int n) { return build_spaces(rectangle_mesh(0, 1, 0, 1, n, n)); }

Field random_field(std::shared_ptr<const DofMap> dofs, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f = zero_field(dofs);
  for (int i = 0; i < f.u.size(); ++i) f.u[i] = u(rng);
  return f;
}

BoundaryData all_tags(VelocityDatum v) {
  BoundaryData bc;
  for (BoundaryTag t : kAllTags) bc[t] = v;
  return bc;
}

}  // namespace

TEST(BuildSpaces, SingleTriangleCounts) {
  const auto d = build_spaces(single_triangle());
  EXPECT_EQ(d->velocity_dofs(), 12);
  EXPECT_EQ(d->pressure_dofs(), 3);
}

TEST(BuildSpaces, TwoTriangleSquareCounts) {
  const auto d = unit_square(1);
  EXPECT_EQ(d->velocity_dofs(), 18);
  EXPECT_EQ(d->pressure_dofs(), 4);
}

TEST(BuildSpaces, EulerFormulaOnChannelMesh) {
  DomainSpec s;
  s.state = Translation{0.2};
  const Mesh m = generate_mesh(s, 0.5, 0.25);
  const auto d = build_spaces(m);
  const int V = static_cast<int>(m.nodes.size()), F = static_cast<int>(m.triangles.size());
  // One hole: V - E + F = 0.
  EXPECT_EQ(d->num_edges, V + F);
  EXPECT_EQ(d->velocity_dofs(), 2 * (V + d->num_edges));
  EXPECT_EQ(d->pressure_dofs(), V);
  // Every boundary node carries exactly one tag.
  std::size_t tagged = 0;
  for (const auto& list : d->tag_nodes) tagged += list.size();
  std::size_t marked = 0;
  for (int t : d->node_tag) marked += t >= 0;
  EXPECT_EQ(tagged, marked);
}

TEST(Viscous, ConstantsAreInTheKernel) {
  const auto d = unit_square(3);
  const SpMat A = assemble_viscous(*d);
  const Field c = interpolate(d, [](Vec2) { return Vec2{0.7, -1.3}; });
  EXPECT_LE((A * c.u).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Viscous, ExactlySymmetric) {
  DomainSpec s;
  s.state = Rotation{0.4};
  const auto d = build_spaces(generate_mesh(s, 0.6, 0.25));
  const SpMat A = assemble_viscous(*d);
  const SpMat At = A.transpose();
  EXPECT_LE((A - At).norm(), 1e-14 * A.norm());
}

TEST(Viscous, QuadraticEnergyIsExact) {
  // Oracle: int |grad (x2^2, 0)|^2 over the unit square = 4 int x2^2 = 4/3.
  const auto d = unit_square(1);
  const Field u = interpolate(d, [](Vec2 x) { return Vec2{x.y * x.y, 0.0}; });
  EXPECT_NEAR(u.u.dot(assemble_viscous(*d) * u.u), 4.0 / 3.0, 1e-14);
}

TEST(Divergence, SolenoidalFieldsVanish) {
  const auto d = unit_square(4);
  const SpMat B = assemble_divergence(*d);
  const Field shear = interpolate(d, [](Vec2 x) { return Vec2{x.y, 0.0}; });
  const Field rot = interpolate(d, [](Vec2 x) { return Vec2{-x.y, x.x}; });
  EXPECT_LE((B * shear.u).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_LE((B * rot.u).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(Divergence, UnitDivergenceGivesMinusMass) {
  const auto d = unit_square(3);
  const Field u = interpolate(d, [](Vec2 x) { return Vec2{x.x, 0.0}; });
  const Vector Bu = assemble_divergence(*d) * u.u;
  // Oracle: int of a P1 hat = sum over incident triangles of area / 3.
  Vector mass = Vector::Zero(d->pressure_dofs());
  for (const auto& t : d->mesh->triangles) {
    const Vec2 a = d->mesh->nodes[t[0]], b = d->mesh->nodes[t[1]], c = d->mesh->nodes[t[2]];
    const double area = 0.5 * cross(b - a, c - a);
    for (int v : t) mass[v] += area / 3.0;
  }
  EXPECT_LE((Bu + mass).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_NEAR(pressure_weights(*d).sum(), 1.0, 1e-14);
}

TEST(Convection, SkewSymmetryOnRandomFields) {
  std::mt19937 rng(3);
  const auto d = unit_square(3);
  for (int k = 0; k < 5; ++k) {
    const Field u = random_field(d, rng), v = random_field(d, rng), phi = random_field(d, rng);
    EXPECT_NEAR(convection_form(u, v, v), 0.0, 1e-14);
    EXPECT_NEAR(convection_form(u, v, phi), -convection_form(u, phi, v), 1e-13);
  }
}

TEST(Convection, ZeroTransportGivesZero) {
  std::mt19937 rng(4);
  const auto d = unit_square(2);
  EXPECT_EQ(convection_form(zero_field(d), random_field(d, rng), random_field(d, rng)), 0.0);
}

TEST(Convection, QuadratureOracle) {
  // u = e1, v = (x1, 0), phi = e1: 1/2 int d1 v1 - 1/2 int (e1.grad e1).v = 1/2.
  const auto d = unit_square(2);
  const Field u = interpolate(d, [](Vec2) { return Vec2{1.0, 0.0}; });
  const Field v = interpolate(d, [](Vec2 x) { return Vec2{x.x, 0.0}; });
  EXPECT_NEAR(convection_form(u, v, u), 0.5, 1e-14);
}

TEST(Convection, VectorMatchesForm) {
  std::mt19937 rng(5);
  const auto d = unit_square(2);
  const Field u = random_field(d, rng), v = random_field(d, rng), phi = random_field(d, rng);
  EXPECT_NEAR(convection_vector(*d, u.u, v.u).dot(phi.u), convection_form(u, v, phi), 1e-13);
}

TEST(Dirichlet, MissingTagIsReported) {
  BoundaryData bc;
  bc[BoundaryTag::Wall] = [](Vec2) { return Vec2{}; };
  EXPECT_THROW(apply_dirichlet(make_stokes_system(unit_square(2)), bc), MissingTag);
}

TEST(Dirichlet, PoiseuilleMidlineValue) {
  DomainSpec s;
  const auto d = build_spaces(generate_mesh(s, 0.5, 0.25));
  const SaddleSystem sys = apply_dirichlet(make_stokes_system(d), flow_boundary_data(0.1, 2.0));
  // Oracle: lambda (L^2 - x2^2), 0.4 on the midline.
  const auto& inflow = d->tag_nodes[static_cast<int>(BoundaryTag::Inflow)];
  ASSERT_FALSE(inflow.empty());
  for (int n : inflow) {
    const double y = d->node_points[n].y;
    EXPECT_NEAR(sys.constrained_values[d->vdof(0, n)], 0.1 * (4.0 - y * y), 1e-15);
    EXPECT_EQ(sys.constrained_values[d->vdof(1, n)], 0.0);
  }
  EXPECT_EQ(poiseuille(0.1, 2.0)({-6.0, 0.0}).x, 0.1 * 4.0);
}

TEST(Dirichlet, HomogeneousDataLeavesFreeRowsUnchanged) {
  const auto d = unit_square(3);
  SaddleSystem sys = make_stokes_system(d);
  sys.f = assemble_load(*d, [](Vec2 x) { return Vec2{x.x, 1.0}; });
  const Vector f0 = sys.f;
  const SaddleSystem c = apply_dirichlet(sys, all_tags([](Vec2) { return Vec2{}; }));
  for (int i = 0; i < f0.size(); ++i)
    if (!c.constrained[i]) EXPECT_EQ(c.f[i], f0[i]);
}

TEST(SolveSaddle, ZeroDataGivesZeroField) {
  const Field f = solve_saddle(apply_dirichlet(make_stokes_system(unit_square(3)), all_tags([](Vec2) { return Vec2{}; })));
  EXPECT_EQ(f.u.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_LE(f.p.lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(SolveSaddle, LidDrivenCavity) {
  const auto d = unit_square(8);
  BoundaryData bc = all_tags([](Vec2) { return Vec2{}; });
  bc[BoundaryTag::Wall] = [](Vec2 x) { return Vec2{x.y == 1.0 ? 1.0 : 0.0, 0.0}; };
  const Field f = solve_saddle(apply_dirichlet(make_stokes_system(d), bc));
  EXPECT_LE(std::abs(pressure_mean(f)), 1e-12);
  EXPECT_LE(divergence_norm(f), 1e-10);
  // Recirculation: the center moves against the lid.
  double center = 0.0;
  for (int n = 0; n < d->velocity_nodes(); ++n)
    if (d->node_points[n].x == 0.5 && std::abs(d->node_points[n].y - 0.25) < 1e-12) center = f.u[n];
  EXPECT_LT(center, 0.0);
}

TEST(SolveSaddle, ManufacturedErrorDecreases) {
  const auto e1 = mms::errors(mms::solve(4));
  const auto e2 = mms::errors(mms::solve(8));
  EXPECT_LT(e2.velocity_l2, e1.velocity_l2 / 4.0);
  EXPECT_LT(e2.gradient_l2, e1.gradient_l2 / 2.0);
  EXPECT_LT(e2.pressure_l2, e1.pressure_l2 / 2.0);
}

TEST(SolveSaddle, UnstructuredRatesNearNominal) {
  const auto rows = mms::convergence_study({0.2, 0.1, 0.05});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows.back().gradient_rate, 2.0, 0.4);
  EXPECT_NEAR(rows.back().velocity_rate, 3.0, 0.5);
  EXPECT_THROW(mms::convergence_study({0.2, 0.1}), InputError);
  EXPECT_THROW(mms::convergence_study({0.1, 0.2, 0.05}), InputError);
}

TEST(SolveSaddle, DiscreteDivergenceOfUnforcedStokes) {
  DomainSpec s;
  s.state = Translation{0.3};
  const auto d = build_spaces(generate_mesh(s, 0.5, 0.25));
  const Field u = solve_stokes(d, 0.1);
  EXPECT_LE(divergence_norm(u), 1e-8);
  EXPECT_LE(std::abs(pressure_mean(u)), 1e-12);
}

TEST(SolveSaddle, EnergyIdentityWithHomogeneousData) {
  // Stokes with zero data: int |grad u|^2 = int f . u since B u = 0.
  const auto d = unit_square(6);
  SaddleSystem sys = make_stokes_system(d);
  sys.f = assemble_load(*d, [](Vec2 x) { return Vec2{std::sin(3.0 * x.y), x.x * x.x}; });
  const Field u = solve_saddle(apply_dirichlet(sys, all_tags([](Vec2) { return Vec2{}; })));
  const double lhs = u.u.dot(assemble_viscous(*d) * u.u);
  const double rhs = sys.f.dot(u.u);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(rhs));
}
