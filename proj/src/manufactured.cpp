#include "channel_eq/manufactured.hpp"

#include <cmath>
#include <numbers>

#include "channel_eq/errors.hpp"
#include "channel_eq/mesh.hpp"

namespace channel_eq::mms {
namespace {

constexpr double pi = std::numbers::pi;

double S(double t) { return std::pow(std::sin(pi * t), 2); }
double S1(double t) { return pi * std::sin(2.0 * pi * t); }
double S2(double t) { return 2.0 * pi * pi * std::cos(2.0 * pi * t); }
double S3(double t) { return -4.0 * pi * pi * pi * std::sin(2.0 * pi * t); }

}  // namespace

Vec2 velocity(Vec2 x) { return {S(x.x) * S1(x.y), -S1(x.x) * S(x.y)}; }

std::array<double, 4> velocity_gradient(Vec2 x) {
  return {S1(x.x) * S1(x.y), S(x.x) * S2(x.y), -S2(x.x) * S(x.y), -S1(x.x) * S1(x.y)};
}

double pressure(Vec2 x) { return std::cos(pi * x.x) * std::cos(pi * x.y); }

Vec2 forcing(Vec2 x) {
  const double lap1 = S2(x.x) * S1(x.y) + S(x.x) * S3(x.y);
  const double lap2 = -S3(x.x) * S(x.y) - S1(x.x) * S2(x.y);
  const double px = -pi * std::sin(pi * x.x) * std::cos(pi * x.y);
  const double py = -pi * std::cos(pi * x.x) * std::sin(pi * x.y);
  return {-lap1 + px, -lap2 + py};
}

Errors errors(const Field& f) {
  const DofMap& dm = *f.dofs;
  double eu = 0.0, eg = 0.0, ep = 0.0;
  constexpr int levels = 4;  // 4 x 4 sub-triangles
  for (int t = 0; t < static_cast<int>(dm.cells.size()); ++t) {
    const auto g = fem::element_geometry(dm, t);
    const auto& c = dm.cells[t];
    for (int i = 0; i < levels; ++i) {
      for (int j = 0; i + j < levels; ++j) {
        // Upright and (when present) inverted sub-triangles in barycentric steps.
        const int count = (i + j < levels - 1) ? 2 : 1;
        for (int k = 0; k < count; ++k) {
          std::array<std::array<double, 2>, 3> s;
          if (k == 0)
            s = {{{double(i), double(j)}, {double(i + 1), double(j)}, {double(i), double(j + 1)}}};
          else
            s = {{{double(i + 1), double(j)}, {double(i + 1), double(j + 1)}, {double(i), double(j + 1)}}};
          for (const auto& q : fem::kTriangleRule) {
            const double a = (q.l0 * s[0][0] + q.l1 * s[1][0] + q.l2 * s[2][0]) / levels;
            const double b = (q.l0 * s[0][1] + q.l1 * s[1][1] + q.l2 * s[2][1]) / levels;
            const double l1 = a, l2 = b, l0 = 1.0 - a - b;
            const auto basis = fem::p2_basis(g, l0, l1, l2);
            const auto U = fem::sample_velocity(dm, f.u, t, basis);
            const Vec2 x = l0 * g.x[0] + l1 * g.x[1] + l2 * g.x[2];
            const double w = q.w * g.area / (levels * levels);
            const Vec2 ue = velocity(x);
            const auto ge = velocity_gradient(x);
            const double ph = l0 * f.p[c[0]] + l1 * f.p[c[1]] + l2 * f.p[c[2]];
            eu += w * (std::pow(U.value.x - ue.x, 2) + std::pow(U.value.y - ue.y, 2));
            for (int m = 0; m < 4; ++m) eg += w * std::pow(U.grad[m] - ge[m], 2);
            ep += w * std::pow(ph - pressure(x), 2);
          }
        }
      }
    }
  }
  return {std::sqrt(eu), std::sqrt(eg), std::sqrt(ep)};
}

Field solve(int n) { return solve_on(rectangle_mesh(0.0, 1.0, 0.0, 1.0, n, n)); }

Field solve_on(const Mesh& mesh) {
  auto dofs = build_spaces(mesh);
  SaddleSystem sys = make_stokes_system(dofs);
  sys.f = assemble_load(*dofs, forcing);
  BoundaryData bc;
  for (BoundaryTag t : kAllTags) bc[t] = velocity;
  return solve_saddle(apply_dirichlet(std::move(sys), bc));
}

std::vector<StudyRow> convergence_study(const std::vector<double>& target_h) {
  if (target_h.size() < 3) throw InputError("convergence study needs at least three mesh sizes");
  for (std::size_t i = 1; i < target_h.size(); ++i)
    if (!(target_h[i] < target_h[i - 1]) || !(target_h[i] > 0.0))
      throw InputError("convergence study sizes must be positive and decreasing");
  std::vector<StudyRow> rows;
  for (double h : target_h) {
    const Mesh mesh = rectangle_mesh_unstructured(0.0, 1.0, 0.0, 1.0, h);
    StudyRow row;
    row.h = h;
    row.err = errors(solve_on(mesh));
    if (!rows.empty()) {
      const StudyRow& prev = rows.back();
      const double lh = std::log(prev.h / row.h);
      row.velocity_rate = std::log(prev.err.velocity_l2 / row.err.velocity_l2) / lh;
      row.gradient_rate = std::log(prev.err.gradient_l2 / row.err.gradient_l2) / lh;
      row.pressure_rate = std::log(prev.err.pressure_l2 / row.err.pressure_l2) / lh;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace channel_eq::mms
