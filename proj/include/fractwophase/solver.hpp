#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fractwophase/energy.hpp"

namespace fractwophase {

enum class StepRule { Fixed, AdaptiveTwoPoint };

struct SolverConfig {
  std::size_t max_iters = 200000;
  /// Stop when ||first_variation||_2 <= grad_tol * data_scale().
  double grad_tol = 1e-9;
  StepRule step_rule = StepRule::AdaptiveTwoPoint;
  /// Initial (and, for StepRule::Fixed, nominal) step; 0 selects a spectral estimate.
  double fixed_step = 0.0;
  double armijo_c = 1e-4;
  int max_backtracks = 60;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SolveStats {
  std::size_t iterations = 0;
  double residual = 0.0;   // ||first_variation||_2 at exit
  double threshold = 0.0;  // absolute stopping threshold
  double energy = 0.0;     // regularized energy at exit
  std::size_t rejected_steps = 0;
  /// Regularized energy after every accepted step (first entry: initial guess).
  std::vector<double> energy_trace;
};

/// Minimiser of energy_regularized at fixed eps by projected descent
/// (two-point step, Armijo backtracking, projection = zero outside Omega).
/// Throws NonConvergence when the tolerance is not met within max_iters.
GridFunction solve_regularized(const ProblemData& data, double eps, const SolverConfig& config,
                               const std::optional<GridFunction>& warm_start = std::nullopt,
                               SolveStats* stats = nullptr, bool record_trace = false);

struct SolutionDiagnostics {
  double final_eps = 0.0;
  std::vector<std::size_t> stage_iterations;
  std::size_t iterations = 0;
  double residual = 0.0;
  double residual_threshold = 0.0;
  double energy = 0.0;                // regularized energy at final eps
  double energy_unregularized = 0.0;  // J^s_p(u)
  double interphase_measure = 0.0;    // measure of {|u - v| < final eps}
};

/// Two-phase triple (u, chi_>, chi_<) with zeta = lambda_+ chi_> - lambda_- chi_<.
struct Solution {
  GridFunction u;
  GridFunction v;  // level set the triple refers to
  GridFunction chi_gt;
  GridFunction chi_lt;
  GridFunction zeta;
  SolutionDiagnostics diagnostics;
};

/// eps-continuation with warm starts; chi fields are H_eps at the final eps.
/// NonConvergence carries the failing stage index.
Solution solve_two_phase(const ProblemData& data, const RegularizationParams& reg,
                         const SolverConfig& config,
                         const std::optional<GridFunction>& warm_start = std::nullopt);

/// <|D^s u|^(p-2) D^s u, D^s w> + <zeta - f, w>_Omega.
double weak_form_residual(const Solution& sol, const ProblemData& data, const GridFunction& w);

/// [Psi_v(w) - Psi_v(u)] - [<f, w-u> - <|D^s u|^(p-2) D^s u, D^s (w-u)>]; >= 0 for the exact solution.
double variational_inequality_defect(const Solution& sol, const ProblemData& data, const GridFunction& w);
/// Admissible negative slack of the defect for a regularized solution:
/// (eps/2)(||lambda_+||_1 + ||lambda_-||_1) + ||residual||_2 ||w - u||_2.
double variational_inequality_tolerance(const Solution& sol, const ProblemData& data,
                                        const GridFunction& w);

/// Zero-extended field with i.i.d. uniform(-1, 1) values on Omega.
GridFunction random_test_function(const OmegaMask& mask, std::uint64_t seed);

struct RateReport {
  std::vector<double> eps;
  std::vector<double> errors;  // ||D^s(u_eps - u_ref)||_p
  double reference_eps = 0.0;
  double noise_floor = 0.0;    // 10x absolute solver tolerance
  std::size_t usable_points = 0;
  double fitted_slope = 0.0;   // NaN when regularization is inactive
  bool regularization_inactive = false;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Errors of u_eps against a reference solve at min(eps)/8 and the fitted log-log slope.
/// eps_list must be strictly decreasing with at least 4 entries.
RateReport epsilon_rate_study(const ProblemData& data, const std::vector<double>& eps_list,
                              const SolverConfig& config);

struct TwoMembraneSolution {
  GridFunction u;
  GridFunction w;
  GridFunction chi_gt;  // H_eps(u - w)
  GridFunction chi_lt;  // H_eps(w - u)
  GridFunction zeta;
  SolutionDiagnostics diagnostics;
  std::vector<double> energy_trace;  // joint energy after every stage
};

/// Joint minimisation of the two-membrane functional; data supplies f, lambda_+-, p, s (v unused),
/// g is the load on the second membrane.
TwoMembraneSolution solve_two_membrane(const ProblemData& data, const GridFunction& g,
                                       const RegularizationParams& reg, const SolverConfig& config);

double two_membrane_energy(const GridFunction& u, const GridFunction& w, const ProblemData& data,
                           const GridFunction& g, double eps);

struct TwoMembraneRateReport {
  std::vector<double> eps;
  std::vector<double> errors_u;
  std::vector<double> errors_w;
  double reference_eps = 0.0;
};

TwoMembraneRateReport two_membrane_rate_study(const ProblemData& data, const GridFunction& g,
                                              const std::vector<double>& eps_list,
                                              const SolverConfig& config);

/// Discrete Poincare constant sup ||u||_{L^p(Omega)} / ||D^s u||_p over zero-extended u,
/// by nonlinear inverse power iteration (each step solves -Delta^s_p w = |u|^(p-2) u).
/// Iterates until the Rayleigh quotient settles to rel_tol.
double poincare_constant(const MaskPtr& mask, double p, double s, const SolverConfig& config,
                         double rel_tol = 1e-6, int max_steps = 200);

/// Measure of {x in Omega : |u - v| < delta}.
double measure_interphase(const GridFunction& u, const GridFunction& v, double delta,
                          const OmegaMask& mask);

struct NondegeneracyMap {
  std::vector<std::uint8_t> nodewise;  // 1 outside Omega
  bool global = false;
};

/// Nodewise lambda_+ < f_eff or f_eff < -lambda_-, with f_eff = f + shift.
NondegeneracyMap check_nondegeneracy(const ProblemData& data,
                                     const std::optional<GridFunction>& shift = std::nullopt);

}  // namespace fractwophase
