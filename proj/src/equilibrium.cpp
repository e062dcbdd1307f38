#include "channel_eq/equilibrium.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "channel_eq/errors.hpp"

namespace channel_eq {

namespace {

double table_value(const UserTable& t, double x) {
  const auto& s = t.samples;
  if (s.size() < 2 || x < s.front().first || x > s.back().first) {
    std::ostringstream msg;
    msg << "position " << x << " lies outside the restoring-force table";
    throw InputError(msg.str());
  }
  auto it = std::lower_bound(s.begin(), s.end(), x,
                             [](const std::pair<double, double>& a, double v) { return a.first < v; });
  if (it == s.begin()) return it->second;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  return lo.second + (hi.second - lo.second) * (x - lo.first) / (hi.first - lo.first);
}

double table_slope(const UserTable& t, double x) {
  const auto& s = t.samples;
  table_value(t, x);
  std::size_t i = 1;
  while (i + 1 < s.size() && s[i].first <= x) ++i;
  return (s[i].second - s[i - 1].second) / (s[i].first - s[i - 1].first);
}

}  // namespace

double force_value(const RestoringForce& force, double x, double L) {
  if (const auto* v = std::get_if<VerticalSpring>(&force)) {
    const double c = (L - 1.0) * (L - 1.0) - x * x;
    return v->kappa * x * std::pow(c, -v->p);
  }
  if (const auto* g = std::get_if<TorsionSpring>(&force)) return g->kappa * std::tan(x);
  return table_value(std::get<UserTable>(force), x);
}

double force_derivative(const RestoringForce& force, double x, double L) {
  if (const auto* v = std::get_if<VerticalSpring>(&force)) {
    const double c = (L - 1.0) * (L - 1.0) - x * x;
    return v->kappa * std::pow(c, -v->p) + 2.0 * v->kappa * v->p * x * x * std::pow(c, -v->p - 1.0);
  }
  if (const auto* g = std::get_if<TorsionSpring>(&force)) {
    const double c = std::cos(x);
    return g->kappa / (c * c);
  }
  return table_slope(std::get<UserTable>(force), x);
}

void validate_force(const RestoringForce& force, Mode mode, double L) {
  if (const auto* v = std::get_if<VerticalSpring>(&force)) {
    if (mode != Mode::Translation) throw InputError("VerticalSpring applies to translation mode");
    if (!(v->kappa > 0.0)) throw InputError("VerticalSpring needs kappa > 0");
    if (!(v->p > 1.5)) throw InputError("VerticalSpring needs p > 3/2 for the strong-force limit");
    // Blow-up guard: |f| delta^(3/2) must keep growing as the gap delta closes.
    double prev = 0.0;
    for (double delta = 1e-1; delta >= 1e-6; delta *= 0.1) {
      const double product = std::abs(force_value(force, L - 1.0 - delta, L)) * std::pow(delta, 1.5);
      if (!(product > prev)) throw InputError("VerticalSpring does not dominate the gap singularity");
      prev = product;
    }
  } else if (const auto* g = std::get_if<TorsionSpring>(&force)) {
    if (mode != Mode::Rotation) throw InputError("TorsionSpring applies to rotation mode");
    if (!(g->kappa > 0.0)) throw InputError("TorsionSpring needs kappa > 0");
    if (!(force_value(force, std::numbers::pi / 2.0 - 1e-3, L) > 100.0 * g->kappa))
      throw InputError("TorsionSpring does not blow up at a quarter turn");
  } else {
    const auto& s = std::get<UserTable>(force).samples;
    if (s.size() < 3) throw InputError("restoring-force table needs at least three samples");
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!(s[i].first > s[i - 1].first) || !(s[i].second > s[i - 1].second))
        throw InputError("restoring-force table must be strictly increasing");
    if (!(s.front().first < 0.0 && s.back().first > 0.0) || table_value(std::get<UserTable>(force), 0.0) != 0.0)
      throw InputError("restoring-force table must pass through (0, 0)");
    return;
  }
  // Monotonicity on a 100-point grid over the admissible interval.
  const double a = mode == Mode::Translation ? L - 1.0 : std::numbers::pi / 2.0;
  for (int i = 0; i < 100; ++i) {
    const double x = -a + 2.0 * a * (i + 0.5) / 100.0;
    if (!(force_derivative(force, x, L) > 0.0)) throw InputError("restoring force is not increasing");
  }
}

int worker_count() {
  if (const char* e = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long n = std::strtol(e, &end, 10);
    if (end != e && *end == '\0' && n >= 1) return static_cast<int>(std::min<long>(n, 256));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int k = 0; k < workers; ++k) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Mesh make_mesh(const DomainSpec& geometry, const Resolution& res, const ObstacleState& state) {
  DomainSpec spec = geometry;
  spec.state = state;
  spec.symmetrize = res.symmetrize;
  Mesh mesh = generate_mesh(spec, res.target_h, res.grading);
  for (int i = 0; i < res.refinements; ++i) mesh = refine_channel(mesh, res.corner_radius);
  return mesh;
}

Sample equilibrium_sample(const Problem& problem, Mode mode, double position) {
  auto dofs = build_spaces(
      std::make_shared<const Mesh>(make_mesh(problem.geometry, problem.resolution, make_state(mode, position))));
  FlowProblem flow(dofs);
  const bool lift = mode == Mode::Translation;
  const Field w = flow.aux(lift ? AuxKind{LiftAux{}} : AuxKind{TorqueAux{}});
  SolveReport report;
  const Field u = flow.navier_stokes(problem.solver, &report);

  Sample s;
  s.position = position;
  s.load = evaluate_force(u, w, lift ? ForceKind::Lift : ForceKind::Torque);
  s.restoring = force_value(problem.force, position, problem.geometry.L);
  s.value = lift ? s.restoring + s.load.volume_value : s.restoring - s.load.volume_value;
  s.residual = report.residual;
  if (report.warning) s.note = "residual stalled near tolerance";
  return s;
}

Sample psi(const Problem& problem, double h) { return equilibrium_sample(problem, Mode::Translation, h); }

Sample chi(const Problem& problem, double theta) {
  return equilibrium_sample(problem, Mode::Rotation, theta);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::UniqueAtZero: return "UNIQUE-AT-ZERO";
    case Verdict::MultipleRoots: return "MULTIPLE-ROOTS";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

double scan_limit(Mode mode, double L, double margin) {
  return (mode == Mode::Translation ? L - 1.0 : std::numbers::pi / 2.0) - margin;
}

namespace {

int sign_of(double v, double zero_tol) { return std::abs(v) <= zero_tol ? 0 : (v > 0.0 ? 1 : -1); }

Sample safe_sample(const Problem& problem, Mode mode, double x) {
  try {
    return equilibrium_sample(problem, mode, x);
  } catch (const NoConvergence& e) {
    Sample s;
    s.position = x;
    s.converged = false;
    s.residual = e.last_residual();
    s.value = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream note;
    note << "no convergence (reached R=" << e.reached_R() << ", residual " << e.last_residual() << ")";
    s.note = note.str();
    return s;
  }
}

// Bisection-secant hybrid on [lo, hi] with values of opposite sign.
Root polish(const Problem& problem, Mode mode, double lo, double flo, double hi, double fhi,
            const RootOptions& opt) {
  Root root{0.0, lo, hi, 0.0};
  double x = 0.5 * (lo + hi), fx = 0.0;
  for (int it = 0; it < 60 && hi - lo > 2.0 * opt.root_tol; ++it) {
    double trial = lo - flo * (hi - lo) / (fhi - flo);
    const double w = hi - lo;
    if (!(trial > lo + 0.05 * w && trial < hi - 0.05 * w) || it % 2 == 1) trial = 0.5 * (lo + hi);
    const Sample s = equilibrium_sample(problem, mode, trial);
    x = trial;
    fx = s.value;
    if (sign_of(fx, opt.zero_tol) == 0) {
      lo = hi = x;
      break;
    }
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  if (hi > lo) {
    x = lo - flo * (hi - lo) / (fhi - flo);
    fx = std::abs(flo) < std::abs(fhi) ? flo : fhi;
  }
  root.position = x;
  root.residual = std::abs(fx);
  return root;
}

}  // namespace

EquilibriumReport find_roots(const Problem& problem, Mode mode, const RootOptions& opt) {
  if (opt.grid_n < 8) throw InputError("find_roots needs grid_n >= 8");
  if (!(opt.root_tol > 0.0) || !(opt.margin > 0.0)) throw InputError("root_tol and margin must be positive");
  validate_force(problem.force, mode, problem.geometry.L);
  problem.solver.validate();
  const double a = scan_limit(mode, problem.geometry.L, opt.margin);
  if (!(a > 0.0)) throw InputError("margin leaves no admissible interval");

  EquilibriumReport rep;
  rep.mode = mode;
  rep.R = problem.solver.R;
  rep.lambda = problem.solver.lambda;
  rep.samples.resize(opt.grid_n);
  parallel_for(opt.grid_n, [&](int i) {
    // Mirror-exact grid: x_i = -x_{n-1-i}, and 0 when n is odd.
    const int j = std::min(i, opt.grid_n - 1 - i);
    double x = 2 * j == opt.grid_n - 1 ? 0.0 : -a + 2.0 * a * j / (opt.grid_n - 1);
    if (i != j) x = -x;
    rep.samples[i] = safe_sample(problem, mode, x);
  });

  std::ostringstream env;
  for (const Sample& s : rep.samples) {
    if (!s.converged) {
      ++rep.flagged;
      env << "x=" << s.position << ": " << s.note << "; ";
    }
  }
  rep.envelope = env.str();

  const auto& S = rep.samples;
  for (int i = 0; i < opt.grid_n; ++i) {
    if (!S[i].converged) continue;
    const int si = sign_of(S[i].value, opt.zero_tol);
    if (si == 0) {
      // Exact zero at a grid point: bracketed by its neighbours.
      const double lo = i > 0 ? S[i - 1].position : S[i].position;
      const double hi = i + 1 < opt.grid_n ? S[i + 1].position : S[i].position;
      rep.roots.push_back({S[i].position, lo, hi, std::abs(S[i].value)});
      continue;
    }
    if (i + 1 < opt.grid_n && S[i + 1].converged) {
      const int sn = sign_of(S[i + 1].value, opt.zero_tol);
      if (sn != 0 && sn != si)
        rep.roots.push_back(polish(problem, mode, S[i].position, S[i].value, S[i + 1].position,
                                   S[i + 1].value, opt));
    }
  }

  bool signs = true;
  for (const Sample& s : S) {
    if (!s.converged) continue;
    if (rep.roots.size() == 1 && std::abs(s.position - rep.roots.front().position) <= opt.root_tol) continue;
    if (sign_of(s.value, opt.zero_tol) != sign_of(s.position, 0.0)) signs = false;
  }
  if (rep.flagged > 0 || rep.roots.empty())
    rep.verdict = Verdict::Inconclusive;
  else if (rep.roots.size() > 1)
    rep.verdict = Verdict::MultipleRoots;
  else if (std::abs(rep.roots.front().position) <= opt.root_tol && signs)
    rep.verdict = Verdict::UniqueAtZero;
  else
    rep.verdict = Verdict::Inconclusive;
  return rep;
}

double derivative_probe(const Problem& problem, Mode mode, double position, double step) {
  if (!(step > 0.0)) throw InputError("derivative step must be positive");
  const Sample plus = equilibrium_sample(problem, mode, position + step);
  const Sample minus = equilibrium_sample(problem, mode, position - step);
  return (plus.value - minus.value) / (2.0 * step);
}

std::vector<CertificationCell> certify_uniqueness(const Problem& problem, Mode mode,
                                                  const std::vector<double>& R_list,
                                                  const std::vector<double>& lambda_list,
                                                  const RootOptions& opt) {
  if (R_list.empty() || lambda_list.empty()) throw InputError("certification needs R and lambda lists");
  std::vector<CertificationCell> cells;
  for (double R : R_list) {
    for (double lambda : lambda_list) {
      Problem p = problem;
      p.solver.R = R;
      p.solver.lambda = lambda;
      CertificationCell cell;
      cell.R = R;
      cell.lambda = lambda;
      cell.report = find_roots(p, mode, opt);
      cell.verdict = cell.report.verdict;
      if (cell.report.roots.size() == 1) cell.root = cell.report.roots.front().position;
      cell.sign_structure = true;
      for (const Sample& s : cell.report.samples) {
        if (!s.converged || std::abs(s.position) < 0.05) continue;
        if ((s.value > 0.0) != (s.position > 0.0)) cell.sign_structure = false;
      }
      const auto& S = cell.report.samples;
      cell.endpoint_ratio = std::numeric_limits<double>::infinity();
      cell.endpoint_dominance = S.front().converged && S.back().converged;
      for (const Sample* s : {&S.front(), &S.back()}) {
        if (!s->converged) continue;
        const double load = std::abs(s->load.volume_value);
        const double ratio = load > 0.0 ? std::abs(s->restoring) / load : std::numeric_limits<double>::infinity();
        cell.endpoint_ratio = std::min(cell.endpoint_ratio, ratio);
        if (!(ratio > 2.0)) cell.endpoint_dominance = false;
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-24)) throw InputError("slope undefined: abscissae have no spread");
  return sxy / sxx;
}

WBoundResult wbound_study(const Problem& problem, Mode mode, const std::vector<double>& positions) {
  if (positions.empty()) throw InputError("wbound study needs at least one position");
  WBoundResult out;
  out.mode = mode;
  out.rows.resize(positions.size());
  const Resolution& res = problem.resolution;
  if (mode == Mode::Translation) {
    std::vector<double> eps;
    for (double h : positions) eps.push_back(gap_epsilon(Translation{h}, problem.geometry.L));
    std::vector<double> le;
    for (double e : eps) le.push_back(std::log(e));
    double lo = le.front(), hi = le.front();
    for (double v : le) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (!(hi - lo > 1e-12)) throw InputError("slope undefined: all positions share one gap width");
  }
  parallel_for(static_cast<int>(positions.size()), [&](int i) {
    auto dofs =
        build_spaces(std::make_shared<const Mesh>(make_mesh(problem.geometry, res, make_state(mode, positions[i]))));
    const Field w = solve_aux_w(dofs, mode == Mode::Translation ? AuxKind{LiftAux{}} : AuxKind{TorqueAux{}});
    WBoundRow& row = out.rows[i];
    row.position = positions[i];
    row.epsilon = mode == Mode::Translation ? gap_epsilon(Translation{positions[i]}, problem.geometry.L) : 0.0;
    row.norm = gradient_norm(w);
  });
  if (mode == Mode::Translation) {
    std::vector<double> x, y;
    for (const auto& r : out.rows) {
      x.push_back(std::log(r.epsilon));
      y.push_back(std::log(r.norm));
    }
    out.slope = fit_slope(x, y);
  } else {
    double mn = out.rows.front().norm, mx = mn;
    for (const auto& r : out.rows) {
      mn = std::min(mn, r.norm);
      mx = std::max(mx, r.norm);
    }
    out.ratio = mx / mn;
  }
  return out;
}

}  // namespace channel_eq
