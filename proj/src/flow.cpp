#include "channel_eq/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "channel_eq/errors.hpp"

namespace channel_eq {

void SolveConfig::validate() const {
  std::ostringstream msg;
  if (!(R >= 0.0) || !std::isfinite(R)) msg << "R must be a finite number >= 0";
  else if (!(lambda >= 0.0) || !std::isfinite(lambda)) msg << "lambda must be a finite number >= 0";
  else if (!(newton_tol > 0.0)) msg << "newton_tol must be positive";
  else if (max_newton < 1) msg << "max_newton must be >= 1";
  else if (picard_warmup < 0) msg << "picard_warmup must be >= 0";
  else if (continuation_steps && *continuation_steps < 1) msg << "continuation_steps must be >= 1";
  else if (max_total_iterations < 1) msg << "max_total_iterations must be >= 1";
  if (!msg.str().empty()) throw ConfigError(msg.str());
}

int SolveConfig::steps() const {
  if (continuation_steps) return *continuation_steps;
  return std::max(1, static_cast<int>(std::ceil(R / 0.5)));
}

std::string to_string(const AuxKind& kind) {
  return std::holds_alternative<LiftAux>(kind) ? "lift" : "torque";
}

VelocityDatum poiseuille(double lambda, double L) {
  return [lambda, L](Vec2 x) { return Vec2{lambda * (L * L - x.y * x.y), 0.0}; };
}

BoundaryData flow_boundary_data(double lambda, double L) {
  const VelocityDatum zero = [](Vec2) { return Vec2{}; };
  return {{BoundaryTag::Wall, zero},
          {BoundaryTag::Obstacle, zero},
          {BoundaryTag::Inflow, poiseuille(lambda, L)},
          {BoundaryTag::Outflow, poiseuille(lambda, L)}};
}

BoundaryData aux_boundary_data(const AuxKind& kind) {
  const VelocityDatum zero = [](Vec2) { return Vec2{}; };
  VelocityDatum obstacle;
  if (std::holds_alternative<LiftAux>(kind))
    obstacle = [](Vec2) { return Vec2{0.0, 1.0}; };
  else
    obstacle = [](Vec2 x) { return Vec2{-x.y, x.x}; };
  return {{BoundaryTag::Wall, zero},
          {BoundaryTag::Inflow, zero},
          {BoundaryTag::Outflow, zero},
          {BoundaryTag::Obstacle, obstacle}};
}

Vector momentum_residual(const Field& field, double R) {
  const DofMap& dm = *field.dofs;
  Vector r = assemble_viscous(dm) * field.u;
  r += assemble_divergence(dm).transpose() * field.p;
  if (R != 0.0) r += R * convection_vector(dm, field.u, field.u);
  return r;
}

namespace {

const DomainSpec& require_domain(const DofMap& dofs) {
  if (!dofs.mesh || !dofs.mesh->domain)
    throw InputError("flow problems need a channel mesh (mesh without domain geometry)");
  return *dofs.mesh->domain;
}

double free_norm(const Vector& r, const std::vector<char>& mask) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (i < static_cast<Eigen::Index>(mask.size()) && mask[i]) continue;
    sum += r[i] * r[i];
  }
  return std::sqrt(sum);
}

}  // namespace

FlowProblem::FlowProblem(std::shared_ptr<const DofMap> dofs)
    : dofs_(std::move(dofs)), domain_(require_domain(*dofs_)) {
  A_ = assemble_viscous(*dofs_);
  B_ = assemble_divergence(*dofs_);
  mask_ = fem::boundary_mask(*dofs_);
  solver_ = std::make_unique<fem::SaddleSolver>(dofs_, mask_);
}

FlowProblem::~FlowProblem() = default;

int FlowProblem::factorizations() const { return solver_->factorizations(); }

void FlowProblem::factor_stokes() {
  SpMat block = solver_->velocity_pattern();
  fem::accumulate(A_, block);
  solver_->factorize(block, B_);
  stokes_factored_ = true;
}

Field FlowProblem::stokes(double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
  if (!stokes_factored_) factor_stokes();
  Field out = zero_field(dofs_);
  const Vector values = fem::boundary_values(*dofs_, flow_boundary_data(lambda, domain_.L));
  const Vector zu = Vector::Zero(dofs_->velocity_dofs());
  const Vector zp = Vector::Zero(dofs_->pressure_dofs());
  solver_->solve(zu, zp, values, out.u, out.p);
  out.meta = {0.0, lambda, domain_.state, "stokes"};
  return out;
}

Field FlowProblem::aux(const AuxKind& kind) {
  if (!stokes_factored_) factor_stokes();
  Field out = zero_field(dofs_);
  const Vector values = fem::boundary_values(*dofs_, aux_boundary_data(kind));
  const Vector zu = Vector::Zero(dofs_->velocity_dofs());
  const Vector zp = Vector::Zero(dofs_->pressure_dofs());
  solver_->solve(zu, zp, values, out.u, out.p);
  out.meta = {0.0, 0.0, domain_.state, "aux_" + to_string(kind)};
  return out;
}

Vector FlowProblem::residual(const Vector& u, const Vector& p, double R) const {
  const int nu = dofs_->velocity_dofs();
  Vector r(nu + dofs_->pressure_dofs());
  Vector ru = A_ * u + B_.transpose() * p;
  if (R != 0.0) ru += R * convection_vector(*dofs_, u, u);
  r << ru, B_ * u;
  return r;
}

double FlowProblem::residual_norm(const Field& field, double R) const {
  if (field.dofs != dofs_) throw DofMismatch("residual_norm: field on a different dof map");
  return free_norm(residual(field.u, field.p, R), mask_);
}

Field FlowProblem::navier_stokes(const SolveConfig& cfg, SolveReport* report, const Field* initial) {
  cfg.validate();
  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};
  const int f0 = factorizations();
  const int nu = dofs_->velocity_dofs(), V = dofs_->pressure_dofs();
  const Vector values = fem::boundary_values(*dofs_, flow_boundary_data(cfg.lambda, domain_.L));

  Field cur = zero_field(dofs_);
  if (initial) {
    if (initial->dofs != dofs_) throw DofMismatch("initial iterate on a different dof map");
    cur.u = initial->u;
    cur.p = initial->p;
    for (int i = 0; i < nu; ++i)
      if (mask_[i]) cur.u[i] = values[i];
  } else {
    cur = stokes(cfg.lambda);
  }
  const double load = free_norm(residual(values, Vector::Zero(V), 0.0), mask_);
  const double tol = cfg.newton_tol * std::max(1.0, load);
  rep.tolerance = tol;

  const Vector zu = Vector::Zero(nu), zp = Vector::Zero(V);
  auto step = [&](const Field& from, double R, fem::Linearization kind) {
    SpMat block = solver_->velocity_pattern();
    fem::accumulate(A_, block);
    fem::add_convection(*dofs_, from.u, R, kind, block);
    stokes_factored_ = false;
    solver_->factorize(block, B_);
    Field next = from;
    if (kind == fem::Linearization::Picard) {
      solver_->solve(zu, zp, values, next.u, next.p);
    } else {
      const Vector F = residual(from.u, from.p, R);
      Vector du, dp;
      solver_->solve(-F.head(nu), -F.tail(V), Vector::Zero(nu), du, dp);
      next.u += du;
      next.p += dp;
    }
    return next;
  };

  const double R = cfg.R;
  double done = 0.0;
  double dR = R / cfg.steps();
  double last = residual_norm(cur, 0.0);
  int total = 0;
  bool first = true;
  while (first || done < R) {
    const double target = first && R == 0.0 ? 0.0 : std::min(R, done + dR);
    first = false;
    Field trial = cur;
    double r = residual_norm(trial, target);
    last = r;
    bool failed = false;
    int k = 0;
    while (r > tol) {
      if (total >= cfg.max_total_iterations) {
        rep.residual = r;
        rep.factorizations = factorizations() - f0;
        std::ostringstream msg;
        msg << "no convergence: iteration budget " << cfg.max_total_iterations
            << " exhausted at R=" << target << " (reached R=" << done << ", residual " << r << ")";
        throw NoConvergence(msg.str(), r, done);
      }
      if (k >= cfg.picard_warmup + cfg.max_newton) {
        failed = true;
        break;
      }
      const auto kind = k < cfg.picard_warmup ? fem::Linearization::Picard : fem::Linearization::Newton;
      ++total;
      ++rep.iterations;
      double r_new = std::numeric_limits<double>::infinity();
      Field next;
      try {
        next = step(trial, target, kind);
        r_new = residual_norm(next, target);
      } catch (const SingularSystem&) {
      }
      const bool decreased = std::isfinite(r_new) && r_new < r;
      rep.history.push_back({target, kind == fem::Linearization::Newton, r_new, decreased});
      if (!decreased) {
        if (r <= 100.0 * tol && kind == fem::Linearization::Newton) {
          rep.warning = true;
          break;
        }
        failed = true;
        last = std::isfinite(r_new) ? r_new : r;
        break;
      }
      trial = std::move(next);
      r = r_new;
      last = r;
      ++k;
    }
    if (failed) {
      ++rep.retries;
      dR *= 0.5;
      if (R == 0.0 || dR < 1e-3 * R / cfg.steps()) {
        rep.residual = last;
        rep.factorizations = factorizations() - f0;
        std::ostringstream msg;
        msg << "no convergence: continuation stalled at R=" << done << " of " << R
            << " (last residual " << last << ", tolerance " << tol << ")";
        throw NoConvergence(msg.str(), last, done);
      }
      continue;
    }
    cur = std::move(trial);
    done = target;
    rep.residual = r;
  }
  rep.factorizations = factorizations() - f0;
  cur.meta = {R, cfg.lambda, domain_.state, "navier_stokes"};
  return cur;
}

Field solve_stokes(std::shared_ptr<const DofMap> dofs, double lambda) {
  FlowProblem problem(std::move(dofs));
  return problem.stokes(lambda);
}

Field solve_navier_stokes(std::shared_ptr<const DofMap> dofs, const SolveConfig& cfg,
                          SolveReport* report) {
  FlowProblem problem(std::move(dofs));
  return problem.navier_stokes(cfg, report);
}

Field solve_aux_w(std::shared_ptr<const DofMap> dofs, const AuxKind& kind) {
  FlowProblem problem(std::move(dofs));
  return problem.aux(kind);
}

double cutoff(double x1, double d) {
  const double t = std::clamp((std::abs(x1) - 3.0 * d) / d, 0.0, 1.0);
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

namespace {

void check_spec(const DofMap& dofs, const DomainSpec& spec, Mode mode) {
  const DomainSpec& m = require_domain(dofs);
  if (mode_of(spec.state) != mode || mode_of(m.state) != mode)
    throw InputError("extension " + std::string(mode == Mode::Translation ? "a" : "b") +
                     " requires " + to_string(mode) + " mode");
  if (m.d != spec.d || m.L != spec.L || m.X != spec.X)
    throw GeometryError("extension geometry does not match the mesh (d, L or X differ)");
  validate_state(spec);
}

// I(cutoff * Poiseuille) - z with z solved on the selected cells.
Field corrected_extension(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec,
                          const std::vector<char>& in_sigma, const std::string& label) {
  const DofMap& dm = *dofs;
  const Mesh& mesh = *dm.mesh;
  const double L = spec.L, d = spec.d;
  auto datum = [L, d](Vec2 x) { return Vec2{cutoff(x.x, d) * (L * L - x.y * x.y), 0.0}; };

  Mesh sub;
  std::vector<int> cells, local(mesh.nodes.size(), -1);
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    if (!in_sigma[t]) continue;
    cells.push_back(t);
    std::array<int, 3> tri;
    for (int i = 0; i < 3; ++i) {
      int& id = local[mesh.triangles[t][i]];
      if (id < 0) {
        id = static_cast<int>(sub.nodes.size());
        sub.nodes.push_back(mesh.nodes[mesh.triangles[t][i]]);
      }
      tri[i] = id;
    }
    sub.triangles.push_back(tri);
  }
  if (cells.empty()) throw GeometryError("extension correction region is empty");
  std::unordered_map<std::uint64_t, int> owners;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  };
  for (const auto& t : sub.triangles)
    for (int i = 0; i < 3; ++i) ++owners[key(t[i], t[(i + 1) % 3])];
  for (const auto& t : sub.triangles)
    for (int i = 0; i < 3; ++i)
      if (owners[key(t[i], t[(i + 1) % 3])] == 1)
        sub.boundary_edges.push_back({t[i], t[(i + 1) % 3], BoundaryTag::Wall});

  auto sdofs = build_spaces(sub);
  const Field v = interpolate(sdofs, datum);
  const SpMat As = assemble_viscous(*sdofs), Bs = assemble_divergence(*sdofs);
  fem::SaddleSolver solver(sdofs, fem::boundary_mask(*sdofs));
  SpMat block = solver.velocity_pattern();
  fem::accumulate(As, block);
  solver.factorize(block, Bs);
  Vector z, pz;
  const Vector zero = Vector::Zero(sdofs->velocity_dofs());
  solver.solve(zero, Bs * v.u, zero, z, pz);

  Field a = interpolate(dofs, datum);
  const int snv = sdofs->velocity_nodes(), nv = dm.velocity_nodes();
  std::vector<char> done(snv, 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (int k = 0; k < 6; ++k) {
      const int s = sdofs->cells[i][k];
      if (done[s]) continue;
      done[s] = 1;
      const int g = dm.cells[cells[i]][k];
      a.u[g] -= z[s];
      a.u[nv + g] -= z[snv + s];
    }
  }
  a.meta = {0.0, 1.0, spec.state, label};
  return a;
}

constexpr double kCutTol = 1e-12;

bool straddles(double lo, double hi, double c) { return lo < c - kCutTol && hi > c + kCutTol; }

}  // namespace

Field build_extension_a(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec) {
  check_spec(*dofs, spec, Mode::Translation);
  const Mesh& mesh = *dofs->mesh;
  const double d = spec.d;
  const double h = std::get<Translation>(spec.state).h;
  // Strip below the level for h >= 0, its mirror above for h < 0.
  const double level = extension_strip_level(spec.L);
  const double sgn = h < 0.0 ? -1.0 : 1.0;
  std::vector<char> in_sigma(mesh.triangles.size(), 0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    Vec2 c{};
    for (int v : mesh.triangles[t]) {
      const Vec2 p = mesh.nodes[v];
      xlo = std::min(xlo, p.x);
      xhi = std::max(xhi, p.x);
      const double y = sgn * p.y;
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
      c = c + (1.0 / 3.0) * p;
    }
    for (double cut : {-4.0 * d, -2.0 * d, 2.0 * d, 4.0 * d})
      if (straddles(xlo, xhi, cut))
        throw GeometryError("mesh lacks the extension cut lines (element crosses x1 = " +
                            std::to_string(cut) + ")");
    const double ax = std::abs(c.x);
    if (ax > 2.0 * d && ax < 4.0 * d) {
      in_sigma[t] = 1;
    } else if (ax < 2.0 * d) {
      if (straddles(ylo, yhi, level))
        throw GeometryError("mesh lacks the extension strip line");
      in_sigma[t] = sgn * c.y < level;
    }
  }
  return corrected_extension(std::move(dofs), spec, in_sigma, "extension_a");
}

Field build_extension_b(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec) {
  check_spec(*dofs, spec, Mode::Rotation);
  const double d = spec.d;
  if (!(std::sqrt(1.0 + d * d) < 3.0 * d))
    throw GeometryError("rotation extension needs sqrt(1 + d^2) < 3d so the rotation disk clears "
                        "the cutoff region");
  const DofMap& dm = *dofs;
  const Mesh& mesh = *dm.mesh;
  const double rb = rotation_disk_radius(d, spec.L);
  std::vector<char> in_sigma(mesh.triangles.size(), 0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double xlo = 1e300, xhi = -1e300;
    for (int v : mesh.triangles[t]) {
      xlo = std::min(xlo, mesh.nodes[v].x);
      xhi = std::max(xhi, mesh.nodes[v].x);
    }
    for (double cut : {-4.0 * d, 4.0 * d})
      if (straddles(xlo, xhi, cut))
        throw GeometryError("mesh lacks the extension cut lines (element crosses x1 = " +
                            std::to_string(cut) + ")");
    if (0.5 * (xlo + xhi) > 4.0 * d || 0.5 * (xlo + xhi) < -4.0 * d) continue;
    bool outside = true;
    for (int n : dm.cells[t]) outside = outside && norm(dm.node_points[n]) >= rb;
    if (outside) {
      in_sigma[t] = 1;
    } else {
      for (int n : dm.cells[t])
        if (std::abs(dm.node_points[n].x) > 3.0 * d)
          throw GeometryError("mesh too coarse for the rotation extension: an element meets both "
                              "the rotation disk and the cutoff region");
    }
  }
  return corrected_extension(std::move(dofs), spec, in_sigma, "extension_b");
}

Field build_extension(std::shared_ptr<const DofMap> dofs, const DomainSpec& spec) {
  if (mode_of(spec.state) == Mode::Translation) return build_extension_a(std::move(dofs), spec);
  return build_extension_b(std::move(dofs), spec);
}

}  // namespace channel_eq
