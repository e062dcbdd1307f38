#include <cmath>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "channel_eq/errors.hpp"
#include "commands.hpp"

using namespace channel_eq;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out, mode;
  std::optional<double> R, lambda, position;
  std::optional<int> refine, grid;
  std::optional<long> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key=value config file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--mode", o.mode, "translation or rotation");
  cmd->add_option("--R", o.R, "Reynolds number");
  cmd->add_option("--lambda", o.lambda, "flow-rate parameter");
  cmd->add_option("--position", o.position, "h or theta");
  cmd->add_option("--refine", o.refine, "mesh refinements (convergence: number of halvings)");
  cmd->add_option("--grid", o.grid, "scan grid size");
  cmd->add_option("--seed", o.seed, "recorded for provenance; all drivers are deterministic");
}

cli::RunConfig assemble(const std::string& command, const Overrides& o) {
  cli::RunConfig cfg = o.config.empty() ? cli::RunConfig{} : cli::load_config(o.config);
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  if (o.mode) cli::set_value(cfg, "geometry", "mode", *o.mode);
  if (o.position) cli::set_value(cfg, "geometry", "position", num(*o.position));
  if (o.R) cfg.solver.R = *o.R;
  if (o.lambda) cfg.solver.lambda = *o.lambda;
  if (o.grid) cfg.roots.grid_n = *o.grid;
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.directory = *o.out;
  if (o.refine) {
    if (*o.refine < 0) throw ConfigError("--refine must be >= 0");
    if (command == "convergence") {
      const double h0 = cfg.mms_h.empty() ? 0.1 : cfg.mms_h.front();
      cfg.mms_h.clear();
      for (int k = 0; k <= *o.refine; ++k) cfg.mms_h.push_back(h0 * std::pow(0.5, k));
    } else {
      cfg.mesh.refinements = *o.refine;
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibria of a rigid obstacle in a Poiseuille channel flow"};
  app.require_subcommand(1);
  Overrides o;
  const char* names[][2] = {
      {"solve", "Navier-Stokes solve: VTK field and summary row"},
      {"forces", "lift or torque by both formulas over positions"},
      {"equilibrium", "scan psi or chi and locate its roots"},
      {"certify", "uniqueness verdicts over R and lambda lists"},
      {"convergence", "manufactured-solution error rates"},
      {"wbound", "auxiliary-field norm against wall distance or angle"},
      {"mesh", "generate and write a channel mesh"},
  };
  for (const auto& n : names) add_common(app.add_subcommand(n[0], n[1]), o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  cli::RunConfig cfg;
  try {
    cfg = assemble(command, o);
  } catch (const std::exception& e) {
    std::cerr << "error: configuration: " << e.what() << '\n';
    return 1;
  }
  return cli::dispatch(command, cfg, std::cout, std::cerr);
}
