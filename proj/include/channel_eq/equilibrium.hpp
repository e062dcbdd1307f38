#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "channel_eq/flow.hpp"
#include "channel_eq/forces.hpp"

namespace channel_eq {

// f(h) = kappa h ((L-1)^2 - h^2)^(-p).
struct VerticalSpring {
  double kappa = 1.0;
  double p = 2.0;
};

// g(theta) = kappa tan(theta).
struct TorsionSpring {
  double kappa = 1.0;
};

// Piecewise-linear restoring force through (position, value) samples:
// strictly increasing in both coordinates and passing through (0, 0).
// Evaluation outside the table is refused instead of extrapolated.
struct UserTable {
  std::vector<std::pair<double, double>> samples;
};

using RestoringForce = std::variant<VerticalSpring, TorsionSpring, UserTable>;

// Throws InputError when the family is unsuitable for `mode` or violates
// monotonicity, oddness or the blow-up condition.
void validate_force(const RestoringForce& force, Mode mode, double L);
double force_value(const RestoringForce& force, double position, double L);
double force_derivative(const RestoringForce& force, double position, double L);

// Mesh and discretization used for every position of a scan.
struct Resolution {
  double target_h = 0.1;
  double grading = 0.25;
  bool symmetrize = true;
  int refinements = 0;  // refine_channel steps after generation
  double corner_radius = 0.05;
};

// Channel mesh for `geometry` at `state`, refined res.refinements times.
Mesh make_mesh(const DomainSpec& geometry, const Resolution& res, const ObstacleState& state);

inline const char* kThreadsEnv = "CHANNEL_EQ_THREADS";
// Worker count: CHANNEL_EQ_THREADS if set, else hardware concurrency.
int worker_count();

// Evaluations of a scan: fluid load, restoring force and their combination.
struct Sample {
  double position = 0.0;
  double value = 0.0;      // psi or chi
  double restoring = 0.0;  // f or g
  ForceResult load;        // lift or torque, both formulas
  bool converged = true;
  double residual = 0.0;
  std::string note;
};

struct Problem {
  DomainSpec geometry;  // L, d, X; state replaced per position
  SolveConfig solver;   // R and lambda of the regime
  RestoringForce force = VerticalSpring{};
  Resolution resolution;
};

// psi(h) = f(h) + lift_volume, chi(theta) = g(theta) - torque_volume.
// NoConvergence propagates.
Sample psi(const Problem& problem, double h);
Sample chi(const Problem& problem, double theta);
Sample equilibrium_sample(const Problem& problem, Mode mode, double position);

// Runs fn(i) for i in [0, n) on the worker pool.
void parallel_for(int n, const std::function<void(int)>& fn);

enum class Verdict { UniqueAtZero, MultipleRoots, Inconclusive };
std::string to_string(Verdict v);

struct Root {
  double position = 0.0;
  double lo = 0.0, hi = 0.0;  // sign-change bracket
  double residual = 0.0;      // |psi| or |chi| at the root
};

struct EquilibriumReport {
  Mode mode = Mode::Translation;
  double R = 0.0, lambda = 0.0;
  std::vector<Sample> samples;  // ascending position
  std::vector<Root> roots;
  Verdict verdict = Verdict::Inconclusive;
  int flagged = 0;              // non-converged samples
  std::string envelope;         // convergence notes
};

struct RootOptions {
  int grid_n = 17;
  double root_tol = 1e-4;
  double margin = 0.02;
  // |value| at or below this counts as an exact zero of a sample.
  double zero_tol = 1e-8;
};

// Half-width of the scanned interval: L - 1 - margin or pi/2 - margin.
double scan_limit(Mode mode, double L, double margin);

EquilibriumReport find_roots(const Problem& problem, Mode mode, const RootOptions& options = {});

// Central difference (value(x + step) - value(x - step)) / (2 step).
double derivative_probe(const Problem& problem, Mode mode, double position, double step);

struct CertificationCell {
  double R = 0.0, lambda = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> root;
  bool sign_structure = false;    // sign(value) = sign(position) at converged samples
  bool endpoint_dominance = false;  // |f| > 2 |load| at both extreme samples
  double endpoint_ratio = 0.0;    // min over the two ends of |f| / |load|
  EquilibriumReport report;
};

std::vector<CertificationCell> certify_uniqueness(const Problem& problem, Mode mode,
                                                  const std::vector<double>& R_list,
                                                  const std::vector<double>& lambda_list,
                                                  const RootOptions& options = {});

struct WBoundRow {
  double position = 0.0;
  double epsilon = 0.0;  // translation gap half-width; 0 for rotation rows
  double norm = 0.0;     // gradient_norm of the auxiliary field
};

struct WBoundResult {
  Mode mode = Mode::Translation;
  std::vector<WBoundRow> rows;
  double slope = 0.0;  // translation: least-squares slope of log norm vs log eps
  double ratio = 0.0;  // rotation: max / min norm
};

// Translation: positions h with gaps eps = (L - 1 - |h|) / 2; needs at least
// two distinct eps. Rotation: angles theta. Empty list -> InputError.
WBoundResult wbound_study(const Problem& problem, Mode mode, const std::vector<double>& positions);

// Least-squares slope of y against x; InputError if x has no spread.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace channel_eq
