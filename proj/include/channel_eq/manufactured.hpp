#pragma once

#include <array>
#include <vector>

#include "channel_eq/fem.hpp"

namespace channel_eq::mms {

// Stokes solution on the unit square from the stream function
// sin^2(pi x) sin^2(pi y), with pressure cos(pi x) cos(pi y).
Vec2 velocity(Vec2 x);
std::array<double, 4> velocity_gradient(Vec2 x);  // G00, G01, G10, G11
double pressure(Vec2 x);
// -Laplace(u) + grad p.
Vec2 forcing(Vec2 x);

struct Errors {
  double velocity_l2 = 0.0;
  double gradient_l2 = 0.0;
  double pressure_l2 = 0.0;
};

// Errors of a discrete field against the exact solution, integrated with
// the seven-point rule on 16 sub-triangles per cell.
Errors errors(const Field& f);

// Solves the manufactured problem on an n-by-n rectangle_mesh.
Field solve(int n);
// Same problem on any mesh of the unit square.
Field solve_on(const Mesh& mesh);

struct StudyRow {
  double h = 0.0;  // target size
  Errors err;
  // Rates against the previous row; zero in the first row.
  double velocity_rate = 0.0, gradient_rate = 0.0, pressure_rate = 0.0;
};

// Independently generated unstructured meshes of the unit square with the
// given target sizes (at least 3, decreasing). InputError otherwise.
std::vector<StudyRow> convergence_study(const std::vector<double>& target_h);

}  // namespace channel_eq::mms
