#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "channel_eq/equilibrium.hpp"

namespace channel_eq::cli {

// Flat key=value file with [section] headers; '#' starts a comment.
// Defaults, by section:
//   [geometry]   L=2 d=0.5 X=6 mode=translation position=0
//   [solver]     R=0 lambda=0.1 newton_tol=1e-10 max_newton=25
//                picard_warmup=3 continuation_steps=0 (0: automatic)
//                max_total_iterations=200
//   [mesh]       target_h=0.1 grading=0.25 symmetrize=true refinements=0
//                corner_radius=0.05
//   [force]      family=auto (spring | torsion | table) kappa=1 p=2
//                table= (x:y pairs separated by commas)
//   [experiment] positions= grid_n=17 root_tol=1e-4 margin=0.02
//                zero_tol=1e-8 R_list=0.1,0.2,0.4 lambda_list=0.05,0.1
//                mms_h=0.1,0.05,0.025,0.0125 seed=0
//   [output]     directory=. formats=csv,vtk
struct RunConfig {
  DomainSpec geometry;
  SolveConfig solver = [] {
    SolveConfig s;
    s.lambda = 0.1;
    return s;
  }();
  Resolution mesh;
  std::string family = "auto";
  double kappa = 1.0;
  double p = 2.0;
  std::vector<std::pair<double, double>> table;
  std::vector<double> positions;
  RootOptions roots;
  std::vector<double> R_list{0.1, 0.2, 0.4};
  std::vector<double> lambda_list{0.05, 0.1};
  std::vector<double> mms_h{0.1, 0.05, 0.025, 0.0125};
  long seed = 0;
  std::string directory = ".";
  bool write_csv = true;
  bool write_vtk = true;

  Mode mode() const { return mode_of(geometry.state); }
  double position() const { return position_of(geometry.state); }
  RestoringForce force() const;
  Problem problem() const;
};

// Throws ConfigError on syntax errors, unknown sections or keys and
// malformed values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
// Applies one key of `section` as if read from a file.
void set_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

std::vector<double> parse_list(const std::string& text);

}  // namespace channel_eq::cli
