#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "channel_eq/errors.hpp"
#include "channel_eq/manufactured.hpp"
#include "writers.hpp"

namespace channel_eq::cli {

namespace {

std::string path_in(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.directory);
  return (std::filesystem::path(cfg.directory) / name).string();
}

std::shared_ptr<const DofMap> channel_dofs(const RunConfig& cfg, double position) {
  DomainSpec spec = cfg.geometry;
  spec.state = make_state(cfg.mode(), position);
  validate_state(spec);
  return build_spaces(std::make_shared<const Mesh>(make_mesh(cfg.geometry, cfg.mesh, spec.state)));
}

std::vector<double> positions_or_default(const RunConfig& cfg) {
  return cfg.positions.empty() ? std::vector<double>{cfg.position()} : cfg.positions;
}

ForceKind kind_of(Mode m) { return m == Mode::Translation ? ForceKind::Lift : ForceKind::Torque; }

AuxKind aux_of(Mode m) { return m == Mode::Translation ? AuxKind{LiftAux{}} : AuxKind{TorqueAux{}}; }

}  // namespace

void run_solve(const RunConfig& cfg, std::ostream& out) {
  cfg.solver.validate();
  auto dofs = channel_dofs(cfg, cfg.position());
  FlowProblem flow(dofs);
  SolveReport rep;
  const Field u = flow.navier_stokes(cfg.solver, &rep);
  const Field a = build_extension(dofs, flow.domain());
  const double pert = perturbation_norm(u, a, cfg.solver.lambda);
  if (cfg.write_vtk) write_vtk(path_in(cfg, "solve.vtk"), u);
  if (cfg.write_csv) {
    CsvWriter csv(path_in(cfg, "solve.csv"), {"R", "lambda", "position", "residual", "perturbation_norm", "iterations"});
    csv.row({fmt(cfg.solver.R), fmt(cfg.solver.lambda), fmt(cfg.position()), fmt(rep.residual), fmt(pert),
             std::to_string(rep.iterations)});
  }
  out << "solve " << to_string(cfg.mode()) << " position=" << fmt(cfg.position()) << " R=" << fmt(cfg.solver.R)
      << " lambda=" << fmt(cfg.solver.lambda) << " residual=" << fmt(rep.residual)
      << " iterations=" << rep.iterations << " perturbation_norm=" << fmt(pert) << '\n';
  if (rep.warning) out << "warning: residual stalled within 100x of the tolerance\n";
}

void run_forces(const RunConfig& cfg, std::ostream& out) {
  cfg.solver.validate();
  const std::vector<double> pos = positions_or_default(cfg);
  std::vector<ForceResult> results(pos.size());
  parallel_for(static_cast<int>(pos.size()), [&](int i) {
    FlowProblem flow(channel_dofs(cfg, pos[i]));
    const Field w = flow.aux(aux_of(cfg.mode()));
    const Field u = flow.navier_stokes(cfg.solver);
    results[i] = evaluate_force(u, w, kind_of(cfg.mode()));
  });
  std::unique_ptr<CsvWriter> csv;
  if (cfg.write_csv)
    csv = std::make_unique<CsvWriter>(path_in(cfg, "forces.csv"),
                                      std::vector<std::string>{"position", "R", "lambda", "kind", "boundary",
                                                               "volume", "discrepancy"});
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const ForceResult& r = results[i];
    if (csv)
      csv->row({fmt(pos[i]), fmt(cfg.solver.R), fmt(cfg.solver.lambda), to_string(r.kind), fmt(r.boundary_value),
                fmt(r.volume_value), fmt(r.discrepancy)});
    out << to_string(r.kind) << " position=" << fmt(pos[i]) << " boundary=" << fmt(r.boundary_value)
        << " volume=" << fmt(r.volume_value) << " discrepancy=" << fmt(r.discrepancy) << '\n';
  }
}

std::string verdict_line(const EquilibriumReport& report) {
  std::ostringstream s;
  s << to_string(report.verdict);
  switch (report.verdict) {
    case Verdict::UniqueAtZero: s << " root=" << fmt(report.roots.front().position); break;
    case Verdict::MultipleRoots: s << " count=" << report.roots.size(); break;
    case Verdict::Inconclusive: s << " flagged=" << report.flagged; break;
  }
  return s.str();
}

void run_equilibrium(const RunConfig& cfg, std::ostream& out) {
  const EquilibriumReport rep = find_roots(cfg.problem(), cfg.mode(), cfg.roots);
  if (cfg.write_csv) {
    CsvWriter samples(path_in(cfg, "samples.csv"), {"position", "value", "restoring", "boundary", "volume",
                                                    "converged", "residual", "note"});
    for (const Sample& s : rep.samples)
      samples.row({fmt(s.position), fmt(s.value), fmt(s.restoring), fmt(s.load.boundary_value),
                   fmt(s.load.volume_value), s.converged ? "1" : "0", fmt(s.residual), s.note});
    CsvWriter roots(path_in(cfg, "roots.csv"), {"position", "lo", "hi", "residual"});
    for (const Root& r : rep.roots) roots.row({fmt(r.position), fmt(r.lo), fmt(r.hi), fmt(r.residual)});
  }
  if (rep.flagged) out << "flagged: " << rep.envelope << '\n';
  out << verdict_line(rep) << '\n';
}

void run_certify(const RunConfig& cfg, std::ostream& out) {
  const auto cells = certify_uniqueness(cfg.problem(), cfg.mode(), cfg.R_list, cfg.lambda_list, cfg.roots);
  std::unique_ptr<CsvWriter> csv;
  if (cfg.write_csv)
    csv = std::make_unique<CsvWriter>(path_in(cfg, "certify.csv"),
                                      std::vector<std::string>{"R", "lambda", "verdict", "root", "sign_structure",
                                                               "endpoint_dominance", "endpoint_ratio", "flagged"});
  for (const auto& c : cells) {
    const std::string root = c.root ? fmt(*c.root) : "";
    if (csv)
      csv->row({fmt(c.R), fmt(c.lambda), to_string(c.verdict), root, c.sign_structure ? "1" : "0",
                c.endpoint_dominance ? "1" : "0", fmt(c.endpoint_ratio), std::to_string(c.report.flagged)});
    out << "R=" << fmt(c.R) << " lambda=" << fmt(c.lambda) << ' ' << verdict_line(c.report) << '\n';
  }
}

void run_convergence(const RunConfig& cfg, std::ostream& out) {
  const auto rows = mms::convergence_study(cfg.mms_h);
  std::unique_ptr<CsvWriter> csv;
  if (cfg.write_csv)
    csv = std::make_unique<CsvWriter>(path_in(cfg, "convergence.csv"),
                                      std::vector<std::string>{"h", "velocity_l2", "gradient_l2", "pressure_l2",
                                                               "velocity_rate", "gradient_rate", "pressure_rate"});
  for (const auto& r : rows) {
    if (csv)
      csv->row({fmt(r.h), fmt(r.err.velocity_l2), fmt(r.err.gradient_l2), fmt(r.err.pressure_l2),
                fmt(r.velocity_rate), fmt(r.gradient_rate), fmt(r.pressure_rate)});
    out << "h=" << fmt(r.h) << " velocity=" << fmt(r.err.velocity_l2) << " gradient=" << fmt(r.err.gradient_l2)
        << " pressure=" << fmt(r.err.pressure_l2) << '\n';
  }
  const auto& last = rows.back();
  out << "rates velocity=" << fmt(last.velocity_rate) << " gradient=" << fmt(last.gradient_rate)
      << " pressure=" << fmt(last.pressure_rate) << '\n';
}

void run_wbound(const RunConfig& cfg, std::ostream& out) {
  std::vector<double> pos = cfg.positions;
  const double L = cfg.geometry.L;
  if (pos.empty()) {
    if (cfg.mode() == Mode::Translation) {
      for (double eps : {0.25, 0.1, 0.05, 0.025}) pos.push_back(L - 1.0 - 2.0 * eps);
    } else {
      const double a = scan_limit(Mode::Rotation, L, cfg.roots.margin);
      const int n = std::max(2, cfg.roots.grid_n / 2 + 1);
      for (int i = 0; i < n; ++i) pos.push_back(a * i / (n - 1));
    }
  }
  const WBoundResult res = wbound_study(cfg.problem(), cfg.mode(), pos);
  if (cfg.write_csv) {
    CsvWriter rows(path_in(cfg, "wbound.csv"), {"position", "epsilon", "norm"});
    for (const auto& r : res.rows) rows.row({fmt(r.position), fmt(r.epsilon), fmt(r.norm)});
    CsvWriter fit(path_in(cfg, "wbound_fit.csv"), {"mode", "slope", "ratio"});
    fit.row({to_string(res.mode), fmt(res.slope), fmt(res.ratio)});
  }
  for (const auto& r : res.rows)
    out << "position=" << fmt(r.position) << " epsilon=" << fmt(r.epsilon) << " norm=" << fmt(r.norm) << '\n';
  if (res.mode == Mode::Translation)
    out << "slope=" << fmt(res.slope) << '\n';
  else
    out << "ratio=" << fmt(res.ratio) << '\n';
}

void run_mesh(const RunConfig& cfg, std::ostream& out) {
  DomainSpec spec = cfg.geometry;
  validate_state(spec);
  const Mesh mesh = make_mesh(cfg.geometry, cfg.mesh, cfg.geometry.state);
  write_mesh_file(path_in(cfg, "mesh.msh"), mesh);
  if (cfg.write_vtk) write_vtk(path_in(cfg, "mesh.vtk"), zero_field(build_spaces(mesh)));
  const MeshAudit audit = audit_mesh(mesh);
  out << "mesh nodes=" << mesh.nodes.size() << " triangles=" << mesh.triangles.size()
      << " min_angle=" << fmt(audit.min_angle_deg) << " area=" << fmt(audit.area) << '\n';
}

int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (command == "solve")
      run_solve(cfg, out);
    else if (command == "forces")
      run_forces(cfg, out);
    else if (command == "equilibrium")
      run_equilibrium(cfg, out);
    else if (command == "certify")
      run_certify(cfg, out);
    else if (command == "convergence")
      run_convergence(cfg, out);
    else if (command == "wbound")
      run_wbound(cfg, out);
    else if (command == "mesh")
      run_mesh(cfg, out);
    else
      throw ConfigError("unknown command '" + command + "'");
    return 0;
  } catch (const NoConvergence& e) {
    err << "error: " << e.what() << "\n  last residual " << fmt(e.last_residual())
        << " at R=" << fmt(e.reached_R()) << '\n';
    return 2;
  } catch (const SingularSystem& e) {
    err << "error: solver failure: " << e.what() << '\n';
    return 2;
  } catch (const GeometryError& e) {
    err << "error: geometry: " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    err << "error: configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace channel_eq::cli
