#pragma once

#include <variant>
#include <vector>

#include "fractwophase/limit_study.hpp"

namespace fractwophase {

/// Pointwise map phi(x, w) = v0(x) + c1 * m(w) with m a named builtin.
struct NemytskiiPhi {
  enum class Map { Clamp, Tanh };
  Map map = Map::Clamp;
  GridFunction v0;
  double c1 = 0.0;
  double clamp_bound = 1.0;  // Map::Clamp: m(w) = clamp(w, -bound, bound)
  // Growth bound |phi(x, w)| <= phi0(x) + C1 |w|.
  GridFunction phi0;
  double C1 = 0.0;

  /// Builtin with the natural growth constants phi0 = |v0|, C1 = |c1|.
  static NemytskiiPhi make(Map map, GridFunction v0, double c1, double clamp_bound = 1.0);
  double evaluate(std::size_t node, double w) const;
};

/// Separable kernel: Phi(u)(x) = int_Omega k(x, y) g(u(y)) dy.
struct UrysonPhi {
  enum class Kernel { Constant, Gaussian };
  enum class Nonlinearity { Identity, Clamp, Tanh };
  Kernel kernel = Kernel::Constant;
  double amplitude = 1.0;  // k = amplitude, or amplitude * exp(-|x-y|^2 / width^2)
  double width = 1.0;
  Nonlinearity g = Nonlinearity::Identity;
  double clamp_bound = 1.0;
  // Growth bound |k(x,y) g(w)| <= bound_phi + C |w| (bound_phi constant in x, y).
  double bound_phi = 0.0;
  double C = 0.0;

  /// Builtin with bound_phi = 0, C = |amplitude| (|g(w)| <= |w| for every builtin g).
  static UrysonPhi make(Kernel kernel, double amplitude, double width, Nonlinearity g, double clamp_bound = 1.0);
  double k(std::array<double, 2> x, std::array<double, 2> y, int dim) const;
  double apply_g(double w) const;
};

/// w -> 2 w - v0.
struct AffineReflectionPhi {
  GridFunction v0;
};

/// Phi(u) solves -Delta^t_p w = T(u) in Omega with T(u) = max(g_minus, min(u, g_plus)).
struct CoupledMembranePhi {
  double t = 1.0;
  GridFunction g_minus;
  GridFunction g_plus;
};

using PhiOperator = std::variant<NemytskiiPhi, UrysonPhi, AffineReflectionPhi, CoupledMembranePhi>;

/// Checks the operator's invariants (growth bounds on a sampled w-grid, g_minus <= g_plus,
/// t in [s, 1]); throws ValidationError.
void validate_phi(const PhiOperator& op, const ProblemData& data);

/// Phi(u) on the grid of u. `data` supplies Omega, p and s; `inner` configures the
/// CoupledMembrane solve (which may throw NonConvergence).
GridFunction apply_phi(const PhiOperator& op, const GridFunction& u, const ProblemData& data,
                       const SolverConfig& inner = {});

GridFunction truncation(const GridFunction& u, const GridFunction& g_minus, const GridFunction& g_plus);

struct FixedPointConfig {
  double theta = 0.5;
  int max_outer = 100;
  double fp_tol = 1e-6;
  SolverConfig inner;
  RegularizationParams reg;

  void validate() const;
};

struct QviResult {
  Solution solution;            // S(u_K), with solution.v = Phi(u_K)
  GridFunction iterate;         // u_K
  std::vector<double> history;  // ||u_k - S(u_k)||_2 per outer step
  int outer_iterations = 0;
  double apriori_radius = 0.0;  // bound on ||u_k||_{L^p(Omega)}
};

/// A-priori radius C_P (C_P || |f| + lambda_+ + lambda_- ||_{p'})^(1/(p-1)) for every
/// solution of the two-phase problem, whatever the level set.
double qvi_apriori_radius(const ProblemData& data, const SolverConfig& config);

/// Damped Picard iteration u_{k+1} = (1 - theta) u_k + theta S(u_k), where S solves
/// the two-phase problem with v = Phi(u_k). Stops when
/// ||u_k - S(u_k)||_2 <= fp_tol (1 + ||u_k||_2); otherwise FixedPointNonConvergence.
QviResult solve_qvi(const ProblemData& data, const PhiOperator& op, const FixedPointConfig& fp);

/// solve_qvi at every s, compared against s = 1 as in s_sweep.
SweepReport qvi_s_sweep(const ProblemData& data, const PhiOperator& op, const std::vector<double>& s_list,
                        const FixedPointConfig& fp, const SweepOptions& options = {});

}  // namespace fractwophase
