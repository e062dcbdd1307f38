#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "channel_eq/errors.hpp"
#include "commands.hpp"
#include "run_config.hpp"
#include "writers.hpp"

using namespace channel_eq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("channel_eq_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

struct CliResult {
  int code;
  std::string out, err;
};

// Runs the channel-eq binary in `dir` with a config body and extra flags.
CliResult run_cli(const fs::path& dir, const std::string& args, const std::string& config = "") {
  std::string cmd = std::string(CHANNEL_EQ_CLI) + " " + args;
  if (!config.empty()) {
    std::ofstream(dir / "run.ini") << config;
    cmd += " --config " + (dir / "run.ini").string();
  }
  cmd += " > " + (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(dir / "stdout.txt"), slurp(dir / "stderr.txt")};
}

const char* kCoarse = "[mesh]\ntarget_h=0.5\n";

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  std::istringstream in(
      "# comment line\n"
      "[geometry]\nmode = rotation   # trailing comment\nposition=0.3\nL=2.5\n"
      "[solver]\nR=0.7\nlambda=0.05\ncontinuation_steps=3\n"
      "[mesh]\ntarget_h=0.2\nsymmetrize=false\n"
      "[force]\nkappa=2\n"
      "[experiment]\nR_list=0.1, 0.3\ngrid_n=11\n"
      "[output]\nformats=csv\n");
  const cli::RunConfig c = cli::parse_config(in);
  EXPECT_EQ(c.mode(), Mode::Rotation);
  EXPECT_EQ(c.position(), 0.3);
  EXPECT_EQ(c.geometry.L, 2.5);
  EXPECT_EQ(c.geometry.d, 0.5);
  EXPECT_EQ(c.solver.R, 0.7);
  EXPECT_EQ(c.solver.lambda, 0.05);
  ASSERT_TRUE(c.solver.continuation_steps.has_value());
  EXPECT_EQ(*c.solver.continuation_steps, 3);
  EXPECT_EQ(c.mesh.target_h, 0.2);
  EXPECT_FALSE(c.mesh.symmetrize);
  EXPECT_EQ(c.R_list, (std::vector<double>{0.1, 0.3}));
  EXPECT_EQ(c.roots.grid_n, 11);
  EXPECT_TRUE(c.write_csv);
  EXPECT_FALSE(c.write_vtk);
  const RestoringForce f = c.force();
  ASSERT_TRUE(std::holds_alternative<TorsionSpring>(f));
  EXPECT_EQ(std::get<TorsionSpring>(f).kappa, 2.0);
  const cli::RunConfig d;
  EXPECT_EQ(d.solver.lambda, 0.1);
  EXPECT_TRUE(std::holds_alternative<VerticalSpring>(d.force()));
}

TEST(Config, TableFamily) {
  std::istringstream in("[force]\nfamily=table\ntable=-1:-2, 0:0, 1:3\n");
  const cli::RunConfig c = cli::parse_config(in);
  const RestoringForce f = c.force();
  ASSERT_TRUE(std::holds_alternative<UserTable>(f));
  EXPECT_EQ(std::get<UserTable>(f).samples.size(), 3u);
}

TEST(Config, ErrorsNameTheLine) {
  const std::vector<std::string> bad{"[solver]\nR=abc\n", "[geometry]\nmode=spin\n", "[nope]\n",
                                     "[mesh]\nbogus=1\n", "R=1\n",        "[mesh]\ntarget_h\n",
                                     "[mesh\n"};
  for (const auto& text : bad) {
    std::istringstream in(text);
    try {
      cli::parse_config(in);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_EQ(std::string(e.what()).rfind("line ", 0), 0u) << e.what();
    }
  }
  EXPECT_THROW(cli::load_config("/nonexistent/run.ini"), ConfigError);
}

TEST(Writers, ShortestRoundTrip) {
  EXPECT_EQ(cli::fmt(0.1), "0.1");
  EXPECT_EQ(cli::fmt(-2.0), "-2");
  EXPECT_EQ(std::stod(cli::fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Writers, CsvQuotingAndWidth) {
  const fs::path dir = scratch("csv");
  {
    cli::CsvWriter w((dir / "a.csv").string(), {"x", "note"});
    w.row({"1", "plain"});
    w.row({"2", "a, \"b\""});
    EXPECT_THROW(w.row({"3"}), InputError);
  }
  EXPECT_EQ(slurp(dir / "a.csv"), "x,note\n1,plain\n2,\"a, \"\"b\"\"\"\n");
}

TEST(Cli, SolveWritesFilesAndExitsZero) {
  const fs::path dir = scratch("solve");
  const CliResult r = run_cli(dir, "solve --R 0.5 --position 0.3 --out " + dir.string(), kCoarse);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(first_line(dir / "solve.csv"), "R,lambda,position,residual,perturbation_norm,iterations");
  const std::string vtk = slurp(dir / "solve.vtk");
  EXPECT_NE(vtk.find("UNSTRUCTURED_GRID"), std::string::npos);
  EXPECT_NE(vtk.find("\n22\n"), std::string::npos);
  EXPECT_NE(vtk.find("VECTORS velocity"), std::string::npos);
  EXPECT_NE(vtk.find("SCALARS pressure"), std::string::npos);
}

TEST(Cli, CollisionExitsThree) {
  const fs::path dir = scratch("collision");
  const CliResult r = run_cli(dir, "solve --position 1.0 --out " + dir.string(), kCoarse);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("collision"), std::string::npos) << r.err;
}

TEST(Cli, NonConvergenceExitsTwo) {
  const fs::path dir = scratch("noconv");
  const CliResult r = run_cli(dir, "solve --R 500 --lambda 5 --out " + dir.string(),
                        std::string(kCoarse) + "[solver]\nmax_total_iterations=20\n");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("last residual"), std::string::npos) << r.err;
}

TEST(Cli, InputErrorsExitOne) {
  const fs::path dir = scratch("input");
  EXPECT_EQ(run_cli(dir, "solve", "[mesh]\nbogus=1\n").code, 1);
  EXPECT_EQ(run_cli(dir, "frobnicate").code, 1);
  EXPECT_EQ(run_cli(dir, "solve --R abc").code, 1);
  EXPECT_EQ(run_cli(dir, "convergence --refine 1 --out " + dir.string()).code, 1);
  EXPECT_EQ(run_cli(dir, "solve --help").code, 0);
}

TEST(Cli, ForcesAreByteIdenticalAcrossRuns) {
  const fs::path a = scratch("forces_a"), b = scratch("forces_b");
  const std::string cfg = std::string(kCoarse) + "[experiment]\npositions=0.2,-0.4\n";
  ASSERT_EQ(run_cli(a, "forces --R 1 --out " + a.string(), cfg).code, 0);
  ASSERT_EQ(run_cli(b, "forces --R 1 --out " + b.string(), cfg).code, 0);
  EXPECT_EQ(first_line(a / "forces.csv"), "position,R,lambda,kind,boundary,volume,discrepancy");
  EXPECT_EQ(slurp(a / "forces.csv"), slurp(b / "forces.csv"));
}

TEST(Cli, EquilibriumReportsAVerdict) {
  const fs::path dir = scratch("equilibrium");
  const CliResult r = run_cli(dir, "equilibrium --R 0.2 --grid 8 --out " + dir.string(), kCoarse);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("UNIQUE-AT-ZERO"), std::string::npos) << r.out;
  EXPECT_EQ(first_line(dir / "samples.csv"), "position,value,restoring,boundary,volume,converged,residual,note");
  EXPECT_EQ(first_line(dir / "roots.csv"), "position,lo,hi,residual");
}

TEST(Cli, ConvergenceRates) {
  const fs::path dir = scratch("convergence");
  const CliResult r = run_cli(dir, "convergence --out " + dir.string(), "[experiment]\nmms_h=0.2,0.1,0.05\n");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rates velocity="), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "convergence.csv"));
}

TEST(Cli, MeshFileRoundTrip) {
  const fs::path dir = scratch("mesh");
  const CliResult r = run_cli(dir, "mesh --mode rotation --position 0.5 --out " + dir.string(), kCoarse);
  ASSERT_EQ(r.code, 0) << r.err;
  const Mesh m = read_mesh_file((dir / "mesh.msh").string());
  DomainSpec spec;
  spec.state = Rotation{0.5};
  spec.symmetrize = true;
  const Mesh g = generate_mesh(spec, 0.5, 0.25);
  ASSERT_EQ(m.nodes.size(), g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) EXPECT_TRUE(m.nodes[i] == g.nodes[i]);
  EXPECT_EQ(m.triangles, g.triangles);
}

TEST(Dispatch, MapsExceptionsToCodes) {
  cli::RunConfig cfg;
  cfg.mesh.target_h = 0.5;
  cfg.geometry.state = Translation{1.5};
  std::ostringstream out, err;
  EXPECT_EQ(cli::dispatch("solve", cfg, out, err), 3);
  EXPECT_EQ(cli::dispatch("nonsense", cli::RunConfig{}, out, err), 1);
}
