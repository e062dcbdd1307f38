#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "channel_eq/errors.hpp"
#include "channel_eq/flow.hpp"
#include "channel_eq/forces.hpp"

using namespace channel_eq;

namespace {

std::shared_ptr<const DofMap> channel_dofs(ObstacleState s, double H = 0.3, bool symmetrize = false) {
  DomainSpec spec;
  spec.state = s;
  spec.symmetrize = symmetrize;
  return build_spaces(generate_mesh(spec, H, 0.25));
}

SolveConfig config(double R, double lambda) {
  SolveConfig c;
  c.R = R;
  c.lambda = lambda;
  return c;
}

using NodeIndex = std::map<std::pair<double, double>, int>;

NodeIndex index_nodes(const DofMap& d) {
  NodeIndex out;
  for (int n = 0; n < d.velocity_nodes(); ++n) out[{d.node_points[n].x, d.node_points[n].y}] = n;
  return out;
}

double flip(double v) { return v == 0.0 ? 0.0 : -v; }

// Largest violation of w1(Sx) = s1 w1(x), w2(Sx) = s2 w2(x) where S flips
// x2 (or x1 when `flip_x1`).
double parity_defect(const Field& f, double s1, double s2, bool flip_x1) {
  const DofMap& d = *f.dofs;
  const NodeIndex idx = index_nodes(d);
  double worst = 0.0;
  for (int n = 0; n < d.velocity_nodes(); ++n) {
    const Vec2 p = d.node_points[n];
    const auto it = flip_x1 ? idx.find({flip(p.x), p.y}) : idx.find({p.x, flip(p.y)});
    if (it == idx.end()) return std::numeric_limits<double>::infinity();
    const Vec2 a = f.velocity_at(n), b = f.velocity_at(it->second);
    worst = std::max({worst, std::abs(b.x - s1 * a.x), std::abs(b.y - s2 * a.y)});
  }
  return worst;
}

double x2_parity_defect(const Field& f, double s1, double s2) { return parity_defect(f, s1, s2, false); }

}  // namespace

TEST(SolveConfig, ValidationAndDefaultSteps) {
  EXPECT_EQ(config(0.0, 0.1).steps(), 1);
  EXPECT_EQ(config(2.0, 0.1).steps(), 4);
  EXPECT_EQ(config(2.1, 0.1).steps(), 5);
  SolveConfig bad = config(-1.0, 0.1);
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = config(1.0, 0.1);
  bad.newton_tol = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(FlowProblem, NeedsChannelGeometry) {
  EXPECT_THROW(FlowProblem(build_spaces(rectangle_mesh(0, 1, 0, 1, 2, 2))), InputError);
}

TEST(FlowProblem, ZeroFluxGivesZeroField) {
  FlowProblem fp(channel_dofs(Translation{0.4}));
  const Field s = fp.stokes(0.0);
  EXPECT_EQ(s.u.lpNorm<Eigen::Infinity>(), 0.0);
  const Field n = fp.navier_stokes(config(3.0, 0.0));
  EXPECT_EQ(n.u.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(FlowProblem, ZeroReynoldsIsStokes) {
  FlowProblem fp(channel_dofs(Rotation{0.5}));
  const Field s = fp.stokes(0.1);
  SolveReport rep;
  const Field n = fp.navier_stokes(config(0.0, 0.1), &rep);
  EXPECT_LE((n.u - s.u).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(rep.residual, rep.tolerance);
  EXPECT_FALSE(rep.warning);
}

TEST(FlowProblem, NavierStokesIsX2SymmetricAtTheCenter) {
  FlowProblem fp(channel_dofs(Translation{0.0}, 0.3, true));
  const Field u = fp.navier_stokes(config(2.0, 0.2));
  EXPECT_LE(x2_parity_defect(u, 1.0, -1.0), 1e-10);
}

TEST(FlowProblem, NewtonTailIsQuadratic) {
  FlowProblem fp(channel_dofs(Translation{0.0}));
  SolveReport rep;
  SolveConfig c = config(1.0, 0.1);
  c.newton_tol = 1e-13;
  c.picard_warmup = 1;
  c.continuation_steps = 1;
  fp.navier_stokes(c, &rep);
  // Residuals relative to the load scale; the last Newton step must satisfy
  // e_{k+1} <= 10 e_k^2 unless it already hit round-off.
  const double scale = rep.tolerance / c.newton_tol;
  std::vector<double> e;
  for (const auto& h : rep.history)
    if (h.newton && h.accepted) e.push_back(h.residual / scale);
  ASSERT_GE(e.size(), 2u);
  const double last = e.back(), prev = e[e.size() - 2];
  EXPECT_TRUE(last <= 10.0 * prev * prev || last <= 1e-13) << "prev " << prev << " last " << last;
}

TEST(FlowProblem, HighReynoldsExhaustsOrWarns) {
  FlowProblem fp(channel_dofs(Translation{0.0}, 0.5));
  SolveConfig c = config(500.0, 5.0);
  c.max_total_iterations = 30;
  SolveReport rep;
  try {
    fp.navier_stokes(c, &rep);
    EXPECT_TRUE(rep.warning);
  } catch (const NoConvergence& e) {
    EXPECT_GT(e.last_residual(), 0.0);
    EXPECT_LT(e.reached_R(), 500.0);
    EXPECT_GE(e.reached_R(), 0.0);
  }
}

TEST(FlowProblem, SolutionIndependentOfInitialIterate) {
  FlowProblem fp(channel_dofs(Rotation{0.3}));
  const SolveConfig c = config(1.0, 0.2);
  const Field a = fp.navier_stokes(c);
  const Field zero = zero_field(fp.dofs());
  const Field b = fp.navier_stokes(c, nullptr, &zero);
  EXPECT_LE((a.u - b.u).lpNorm<Eigen::Infinity>(), 1e-8 * a.u.lpNorm<Eigen::Infinity>());
}

TEST(FlowProblem, FarFieldIsPoiseuille) {
  const auto d = channel_dofs(Translation{0.0});
  FlowProblem fp(d);
  // R lambda = 0.04, the largest product for which truncation at X is
  // expected to stay below 1% of lambda L^2 one unit inside.
  const Field u = fp.navier_stokes(config(0.2, 0.2));
  const auto exact = poiseuille(0.2, 2.0);
  double worst = 0.0;
  int seen = 0;
  for (int n = 0; n < d->velocity_nodes(); ++n) {
    if (std::abs(std::abs(d->node_points[n].x) - 5.0) > 0.05) continue;
    const Vec2 e = exact(d->node_points[n]);
    const Vec2 v = u.velocity_at(n);
    worst = std::max(worst, norm(v - e));
    ++seen;
  }
  ASSERT_GT(seen, 0);
  EXPECT_LE(worst, 0.01 * 0.2 * 4.0);
}

TEST(FlowProblem, ResidualNormRejectsForeignFields) {
  FlowProblem fp(channel_dofs(Translation{0.0}, 0.5));
  const Field other = zero_field(channel_dofs(Translation{0.1}, 0.5));
  EXPECT_THROW(fp.residual_norm(other, 0.0), DofMismatch);
}

TEST(AuxField, ObstacleDatumIsExact) {
  const auto d = channel_dofs(Rotation{0.4});
  FlowProblem fp(d);
  const Field lift = fp.aux(LiftAux{});
  const Field torque = fp.aux(TorqueAux{});
  for (int n : d->tag_nodes[static_cast<int>(BoundaryTag::Obstacle)]) {
    const Vec2 x = d->node_points[n];
    EXPECT_EQ(lift.velocity_at(n).x, 0.0);
    EXPECT_EQ(lift.velocity_at(n).y, 1.0);
    EXPECT_EQ(torque.velocity_at(n).x, -x.y);
    EXPECT_EQ(torque.velocity_at(n).y, x.x);
  }
  for (BoundaryTag t : {BoundaryTag::Wall, BoundaryTag::Inflow, BoundaryTag::Outflow})
    for (int n : d->tag_nodes[static_cast<int>(t)]) EXPECT_EQ(norm(lift.velocity_at(n)), 0.0);
  EXPECT_LE(divergence_norm(lift), 1e-8);
}

TEST(AuxField, ParityAtTheCenter) {
  // Reflection x2 -> -x2 flips both obstacle data, so w1 is even and w2 odd
  // composed with the flip: w1(Sx) = -w1(x), w2(Sx) = w2(x).
  FlowProblem fp(channel_dofs(Translation{0.0}, 0.3, true));
  EXPECT_LE(x2_parity_defect(fp.aux(LiftAux{}), -1.0, 1.0), 1e-12);
  EXPECT_LE(x2_parity_defect(fp.aux(TorqueAux{}), -1.0, 1.0), 1e-12);
}

TEST(AuxField, LiftParityInX1OffCenter) {
  FlowProblem fp(channel_dofs(Translation{0.4}, 0.3, true));
  EXPECT_LE(parity_defect(fp.aux(LiftAux{}), -1.0, 1.0, true), 1e-10);
}

TEST(Extension, TranslationFarFieldAndObstacle) {
  DomainSpec spec;
  spec.state = Translation{0.4};
  const auto d = build_spaces(generate_mesh(spec, 0.3, 0.25));
  const Field a = build_extension(d, spec);
  // Far field is lambda = 1 Poiseuille: (4, 0) on the midline at x1 = X.
  EXPECT_EQ(poiseuille(1.0, spec.L)({spec.X, 0.0}).x, 4.0);
  const auto p = poiseuille(1.0, spec.L);
  for (int n : d->tag_nodes[static_cast<int>(BoundaryTag::Outflow)])
    EXPECT_NEAR(norm(a.velocity_at(n) - p(d->node_points[n])), 0.0, 1e-13);
  for (int n : d->tag_nodes[static_cast<int>(BoundaryTag::Obstacle)]) EXPECT_EQ(norm(a.velocity_at(n)), 0.0);
  EXPECT_LE(divergence_norm(a), 1e-8);
}

TEST(Extension, RotationVanishesNearObstacle) {
  DomainSpec spec;
  spec.state = Rotation{-0.9};
  const auto d = build_spaces(generate_mesh(spec, 0.3, 0.25));
  const Field a = build_extension(d, spec);
  const double rho = rotation_disk_radius(spec.d, spec.L);
  for (int n = 0; n < d->velocity_nodes(); ++n)
    if (norm(d->node_points[n]) < rho - 1e-12) EXPECT_EQ(norm(a.velocity_at(n)), 0.0);
  EXPECT_LE(divergence_norm(a), 1e-8);
  // Walls and inflow match lambda = 1 Poiseuille.
  const auto p = poiseuille(1.0, spec.L);
  for (BoundaryTag t : {BoundaryTag::Wall, BoundaryTag::Inflow, BoundaryTag::Outflow})
    for (int n : d->tag_nodes[static_cast<int>(t)])
      EXPECT_NEAR(norm(a.velocity_at(n) - p(d->node_points[n])), 0.0, 1e-13);
}

TEST(Extension, RejectsMismatchedGeometry) {
  DomainSpec spec;
  spec.state = Translation{0.2};
  const auto d = build_spaces(generate_mesh(spec, 0.5, 0.25));
  DomainSpec other = spec;
  other.L = 2.5;
  EXPECT_THROW(build_extension(d, other), GeometryError);
  EXPECT_THROW(build_extension_b(d, spec), InputError);
}
