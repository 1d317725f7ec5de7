#include "fractwophase/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fractwophase {

namespace {

using Blocks = std::vector<GridFunction>;

struct BlockEvaluation {
  double energy = 0.0;
  Blocks residual;
};

double blocks_inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += inner(a[k], b[k]);
  return s;
}

double max_abs_on(const GridFunction& g, const OmegaMask& mask) {
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (mask.inside(i)) m = std::max(m, std::abs(g[i]));
  return m;
}

// Curvature bound of the linear (p = 2) part plus the steepest H_eps slope;
// only used to seed the first step.
double spectral_step_estimate(const SpectralPlan& plan, double lambda_max, double eps) {
  double kmax = 0.0;
  for (double k : plan.wavenumber()) kmax = std::max(kmax, k);
  const double curvature = std::pow(kmax, 2.0 * plan.order()) + lambda_max / eps;
  return 1.0 / std::max(curvature, 1e-300);
}

// Projected descent with two-point (Barzilai-Borwein) steps and monotone
// Armijo backtracking. Iterates stay zero outside Omega because every
// residual block is.
template <typename Evaluate>
Blocks projected_descent(Evaluate&& evaluate, Blocks x, const OmegaMask& mask,
                         const SolverConfig& cfg, double threshold, double initial_step,
                         SolveStats* stats, bool record_trace) {
  for (auto& b : x) b = enforce_zero_extension(b, mask);
  BlockEvaluation ev = evaluate(x);
  double gnorm = std::sqrt(blocks_inner(ev.residual, ev.residual));
  double step = initial_step;
  std::size_t iterations = 0;
  std::size_t rejected = 0;
  std::vector<double> trace;
  if (record_trace) trace.push_back(ev.energy);

  auto finish = [&] {
    if (stats) {
      stats->iterations = iterations;
      stats->residual = gnorm;
      stats->threshold = threshold;
      stats->energy = ev.energy;
      stats->rejected_steps = rejected;
      stats->energy_trace = std::move(trace);
    }
  };

  while (gnorm > threshold) {
    if (iterations >= cfg.max_iters) {
      finish();
      throw NonConvergence("descent: tolerance not reached within max_iters", iterations, gnorm);
    }
    const double gg = gnorm * gnorm;
    double a = step;
    bool accepted = false;
    Blocks trial_x;
    BlockEvaluation trial;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      trial_x = x;
      for (std::size_t k = 0; k < x.size(); ++k) trial_x[k].axpy(-a, ev.residual[k]);
      trial = evaluate(trial_x);
      // Energies are sums of O(n) terms; decreases below their rounding level are not resolvable.
      const double slack = 1e-14 * (1.0 + std::abs(ev.energy));
      if (std::isfinite(trial.energy) && trial.energy <= ev.energy - cfg.armijo_c * a * gg + slack) {
        accepted = true;
        break;
      }
      a *= 0.5;
      ++rejected;
    }
    if (!accepted) {
      finish();
      throw NonConvergence("descent: line search failed", iterations, gnorm);
    }

    if (cfg.step_rule == StepRule::AdaptiveTwoPoint) {
      // s = -a g, y = g_new - g
      Blocks y = trial.residual;
      for (std::size_t k = 0; k < y.size(); ++k) y[k] -= ev.residual[k];
      const double sy = -a * blocks_inner(ev.residual, y);
      const double ss = a * a * gg;
      const double yy = blocks_inner(y, y);
      if (sy > 0.0 && yy > 0.0) {
        step = (iterations % 2 == 0) ? ss / sy : sy / yy;
      } else {
        step = 4.0 * a;
      }
      step = std::clamp(step, 1e-30, 1e30);
    } else {
      step = initial_step;
    }

    x = std::move(trial_x);
    ev = std::move(trial);
    gnorm = std::sqrt(blocks_inner(ev.residual, ev.residual));
    ++iterations;
    if (record_trace) trace.push_back(ev.energy);
  }
  finish();
  return x;
}

GridFunction zero_field(const ProblemData& data) {
  GridFunction z(data.grid_ptr());
  z.mark_zero_outside(true);
  return z;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (!(grad_tol > 0.0)) throw ValidationError("grad_tol must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ValidationError("armijo_c must lie in (0, 1)");
  if (max_backtracks < 0) throw ValidationError("max_backtracks must be >= 0");
  if (fixed_step < 0.0) throw ValidationError("fixed_step must be >= 0");
}

GridFunction solve_regularized(const ProblemData& data, double eps, const SolverConfig& config,
                               const std::optional<GridFunction>& warm_start, SolveStats* stats,
                               bool record_trace) {
  config.validate();
  if (!(eps > 0.0)) throw InvalidArgument("solve_regularized: eps must be positive");
  const OmegaMask& mask = data.mask();
  Blocks x{warm_start ? *warm_start : zero_field(data)};
  if (!(x[0].grid() == mask.grid())) throw DomainError("solve_regularized: warm start grid mismatch");

  const double lambda_max =
      std::max(max_abs_on(data.lambda_plus(), mask), max_abs_on(data.lambda_minus(), mask));
  const double step0 =
      config.fixed_step > 0.0 ? config.fixed_step : spectral_step_estimate(data.plan(), lambda_max, eps);
  const double threshold = config.grad_tol * data.data_scale();

  auto evaluate = [&](const Blocks& b) {
    RegularizedEvaluation e = evaluate_regularized(b[0], data, eps);
    return BlockEvaluation{e.energy, Blocks{std::move(e.residual)}};
  };
  Blocks out = projected_descent(evaluate, std::move(x), mask, config, threshold, step0, stats,
                                 record_trace);
  return std::move(out[0]);
}

Solution solve_two_phase(const ProblemData& data, const RegularizationParams& reg,
                         const SolverConfig& config, const std::optional<GridFunction>& warm_start) {
  reg.validate();
  GridFunction u = warm_start ? enforce_zero_extension(*warm_start, data.mask()) : zero_field(data);
  Solution sol;
  SolveStats st;
  for (int k = 0; k < reg.steps; ++k) {
    try {
      u = solve_regularized(data, reg.eps(k), config, u, &st);
    } catch (const NonConvergence& e) {
      throw NonConvergence(std::string(e.what()) + " at eps stage " + std::to_string(k),
                           e.iterations(), e.residual(), k);
    }
    sol.diagnostics.stage_iterations.push_back(st.iterations);
    sol.diagnostics.iterations += st.iterations;
  }
  const double eps = reg.final_eps();
  ZetaFields z = zeta_from_state(u, data, eps);
  sol.diagnostics.final_eps = eps;
  sol.diagnostics.residual = st.residual;
  sol.diagnostics.residual_threshold = st.threshold;
  sol.diagnostics.energy = st.energy;
  sol.diagnostics.energy_unregularized = energy(u, data);
  sol.diagnostics.interphase_measure = measure_interphase(u, data.v(), eps, data.mask());
  sol.u = std::move(u);
  sol.v = data.v();
  sol.chi_gt = std::move(z.chi_gt);
  sol.chi_lt = std::move(z.chi_lt);
  sol.zeta = std::move(z.zeta);
  return sol;
}

double weak_form_residual(const Solution& sol, const ProblemData& data, const GridFunction& w) {
  const SpectralPlan& plan = data.plan();
  const VectorField flux = p_flux(plan.gradient(sol.u), data.p());
  const VectorField Dw = plan.gradient(w);
  const OmegaMask& mask = data.mask();
  double lower = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (mask.inside(i)) lower += (sol.zeta[i] - data.f()[i]) * w[i];
  return inner(flux, Dw) + lower * mask.grid().cell_volume();
}

double variational_inequality_defect(const Solution& sol, const ProblemData& data,
                                     const GridFunction& w) {
  const SpectralPlan& plan = data.plan();
  const GridFunction diff = w - sol.u;
  const VectorField flux = p_flux(plan.gradient(sol.u), data.p());
  const double f_term = inner(data.f(), diff);  // f vanishes outside Omega
  return phase_energy(w, data) - phase_energy(sol.u, data) - f_term + inner(flux, plan.gradient(diff));
}

double variational_inequality_tolerance(const Solution& sol, const ProblemData& data,
                                        const GridFunction& w) {
  const OmegaMask& mask = data.mask();
  const double reg_slack = 0.5 * sol.diagnostics.final_eps *
                           (l1_norm(data.lambda_plus(), mask) + l1_norm(data.lambda_minus(), mask));
  const double res = lp_norm(first_variation(sol.u, data, sol.diagnostics.final_eps), 2.0);
  const double dist = lp_norm(w - sol.u, 2.0);
  return reg_slack + res * dist + 1e-12 * data.data_scale() * (1.0 + dist);
}

GridFunction random_test_function(const OmegaMask& mask, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  GridFunction w(mask.grid_ptr());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = dist(rng);
    if (mask.inside(i)) w[i] = r;
  }
  w.mark_zero_outside(true);
  return w;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DegenerateFit("loglog_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DegenerateFit("loglog_slope: non-positive value");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw DegenerateFit("loglog_slope: abscissae coincide");
  return sxy / sxx;
}

namespace {

void check_eps_list(const std::vector<double>& eps_list) {
  if (eps_list.size() < 4) throw InvalidArgument("rate study: need at least 4 eps values");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw InvalidArgument("rate study: eps values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw InvalidArgument("rate study: eps values must be strictly decreasing");
  }
}

}  // namespace

RateReport epsilon_rate_study(const ProblemData& data, const std::vector<double>& eps_list,
                              const SolverConfig& config) {
  check_eps_list(eps_list);
  RateReport report;
  report.eps = eps_list;
  report.reference_eps = eps_list.back() / 8.0;
  report.noise_floor = 10.0 * config.grad_tol * data.data_scale();

  std::vector<GridFunction> solutions;
  GridFunction u = zero_field(data);
  for (double eps : eps_list) {
    u = solve_regularized(data, eps, config, u);
    solutions.push_back(u);
  }
  GridFunction ref = u;
  for (double eps = eps_list.back() / 2.0; eps >= report.reference_eps * (1.0 - 1e-12); eps /= 2.0)
    ref = solve_regularized(data, eps, config, ref);

  const SpectralPlan& plan = data.plan();
  const VectorField Dref = plan.gradient(ref);
  for (const auto& sol : solutions) {
    VectorField diff = plan.gradient(sol);
    diff -= Dref;
    report.errors.push_back(vector_lp_norm(diff, data.p()));
  }

  if (data.lambdas_vanish()) {
    report.regularization_inactive = true;
    report.fitted_slope = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < report.errors.size(); ++k) {
    if (report.errors[k] > report.noise_floor) {
      xs.push_back(report.eps[k]);
      ys.push_back(report.errors[k]);
    }
  }
  report.usable_points = xs.size();
  if (xs.size() < 3) throw DegenerateFit("rate study: fewer than 3 errors above the noise floor");
  report.fitted_slope = loglog_slope(xs, ys);
  return report;
}

double two_membrane_energy(const GridFunction& u, const GridFunction& w, const ProblemData& data,
                           const GridFunction& g, double eps) {
  const SpectralPlan& plan = data.plan();
  const double p = data.p();
  const OmegaMask& mask = data.mask();
  auto grad_term = [&](const GridFunction& x) {
    const VectorField G = plan.gradient(x);
    return std::pow(vector_lp_norm(G, p), p) / p;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!mask.inside(i)) continue;
    const double t = u[i] - w[i];
    sum += data.lambda_plus()[i] * smoothed_positive_part(t, eps) +
           data.lambda_minus()[i] * smoothed_positive_part(-t, eps) - data.f()[i] * u[i] - g[i] * w[i];
  }
  return grad_term(u) + grad_term(w) + sum * mask.grid().cell_volume();
}

namespace {

struct TwoMembraneProblem {
  const ProblemData& data;
  GridFunction g;  // zero-extended load of the second membrane
  double eps;

  BlockEvaluation operator()(const Blocks& b) const {
    const SpectralPlan& plan = data.plan();
    const double p = data.p();
    const OmegaMask& mask = data.mask();
    BlockEvaluation out;
    double grad = 0.0;
    Blocks lap;
    for (int k = 0; k < 2; ++k) {
      const VectorField G = plan.gradient(b[k]);
      for (std::size_t i = 0; i < G[0].size(); ++i) {
        const double a = G.magnitude(i);
        grad += p == 2.0 ? a * a : std::pow(a, p);
      }
      GridFunction l = plan.divergence(p_flux(G, p));
      l *= -1.0;
      lap.push_back(std::move(l));
    }
    const double vol = mask.grid().cell_volume();
    double data_terms = 0.0;
    Blocks r{GridFunction(data.grid_ptr()), GridFunction(data.grid_ptr())};
    for (std::size_t i = 0; i < r[0].size(); ++i) {
      if (!mask.inside(i)) continue;
      const double t = b[0][i] - b[1][i];
      const double lp = data.lambda_plus()[i];
      const double lm = data.lambda_minus()[i];
      const double zeta = lp * smoothed_heaviside(t, eps) - lm * smoothed_heaviside(-t, eps);
      r[0][i] = lap[0][i] + zeta - data.f()[i];
      r[1][i] = lap[1][i] - zeta - g[i];
      data_terms += lp * smoothed_positive_part(t, eps) + lm * smoothed_positive_part(-t, eps) -
                    data.f()[i] * b[0][i] - g[i] * b[1][i];
    }
    for (auto& x : r) x.mark_zero_outside(true);
    out.energy = grad * vol / p + data_terms * vol;
    out.residual = std::move(r);
    return out;
  }
};

double two_membrane_scale(const ProblemData& data, const GridFunction& g) {
  return data.data_scale() + lp_norm(g, 2.0, data.mask());
}

Blocks solve_two_membrane_stage(const ProblemData& data, const GridFunction& g, double eps,
                                const SolverConfig& config, Blocks x, SolveStats* stats) {
  const OmegaMask& mask = data.mask();
  const double lambda_max =
      std::max(max_abs_on(data.lambda_plus(), mask), max_abs_on(data.lambda_minus(), mask));
  const double step0 = config.fixed_step > 0.0
                           ? config.fixed_step
                           : spectral_step_estimate(data.plan(), 2.0 * lambda_max, eps);
  TwoMembraneProblem problem{data, g, eps};
  return projected_descent(problem, std::move(x), mask, config,
                           config.grad_tol * two_membrane_scale(data, g), step0, stats, false);
}

}  // namespace

TwoMembraneSolution solve_two_membrane(const ProblemData& data, const GridFunction& g,
                                       const RegularizationParams& reg, const SolverConfig& config) {
  config.validate();
  reg.validate();
  if (!(g.grid() == data.mask().grid())) throw DomainError("solve_two_membrane: g grid mismatch");
  const GridFunction gz = enforce_zero_extension(g, data.mask());
  Blocks x{zero_field(data), zero_field(data)};
  TwoMembraneSolution sol;
  SolveStats st;
  for (int k = 0; k < reg.steps; ++k) {
    try {
      x = solve_two_membrane_stage(data, gz, reg.eps(k), config, std::move(x), &st);
    } catch (const NonConvergence& e) {
      throw NonConvergence(std::string(e.what()) + " at eps stage " + std::to_string(k),
                           e.iterations(), e.residual(), k);
    }
    sol.diagnostics.stage_iterations.push_back(st.iterations);
    sol.diagnostics.iterations += st.iterations;
    sol.energy_trace.push_back(st.energy);
  }
  const double eps = reg.final_eps();
  sol.u = std::move(x[0]);
  sol.w = std::move(x[1]);
  sol.chi_gt = GridFunction(data.grid_ptr());
  sol.chi_lt = GridFunction(data.grid_ptr());
  sol.zeta = GridFunction(data.grid_ptr());
  const OmegaMask& mask = data.mask();
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    if (!mask.inside(i)) continue;
    const double t = sol.u[i] - sol.w[i];
    sol.chi_gt[i] = smoothed_heaviside(t, eps);
    sol.chi_lt[i] = smoothed_heaviside(-t, eps);
    sol.zeta[i] = data.lambda_plus()[i] * sol.chi_gt[i] - data.lambda_minus()[i] * sol.chi_lt[i];
  }
  sol.diagnostics.final_eps = eps;
  sol.diagnostics.residual = st.residual;
  sol.diagnostics.residual_threshold = st.threshold;
  sol.diagnostics.energy = st.energy;
  sol.diagnostics.interphase_measure = measure_interphase(sol.u, sol.w, eps, mask);
  return sol;
}

TwoMembraneRateReport two_membrane_rate_study(const ProblemData& data, const GridFunction& g,
                                              const std::vector<double>& eps_list,
                                              const SolverConfig& config) {
  check_eps_list(eps_list);
  const GridFunction gz = enforce_zero_extension(g, data.mask());
  TwoMembraneRateReport report;
  report.eps = eps_list;
  report.reference_eps = eps_list.back() / 8.0;
  std::vector<Blocks> states;
  Blocks x{zero_field(data), zero_field(data)};
  for (double eps : eps_list) {
    x = solve_two_membrane_stage(data, gz, eps, config, std::move(x), nullptr);
    states.push_back(x);
  }
  Blocks ref = x;
  for (double eps = eps_list.back() / 2.0; eps >= report.reference_eps * (1.0 - 1e-12); eps /= 2.0)
    ref = solve_two_membrane_stage(data, gz, eps, config, std::move(ref), nullptr);
  const SpectralPlan& plan = data.plan();
  const VectorField Du = plan.gradient(ref[0]);
  const VectorField Dw = plan.gradient(ref[1]);
  for (const auto& st : states) {
    VectorField eu = plan.gradient(st[0]);
    eu -= Du;
    VectorField ew = plan.gradient(st[1]);
    ew -= Dw;
    report.errors_u.push_back(vector_lp_norm(eu, data.p()));
    report.errors_w.push_back(vector_lp_norm(ew, data.p()));
  }
  return report;
}

double poincare_constant(const MaskPtr& mask, double p, double s, const SolverConfig& config,
                         double rel_tol, int max_steps) {
  if (!mask) throw DomainError("poincare_constant: missing mask");
  const GridPtr& grid = mask->grid_ptr();
  const GridFunction zero(grid);
  GridFunction u = enforce_zero_extension(GridFunction(grid, 1.0), *mask);
  u *= 1.0 / lp_norm(u, p, *mask);
  const SpectralPlan& plan = *spectral_plan(grid, FractionalOrder(s));
  double previous = 0.0;
  for (int k = 0; k < max_steps; ++k) {
    GridFunction rhs = u;
    if (p != 2.0)
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = std::copysign(std::pow(std::abs(u[i]), p - 1.0), u[i]);
    const ProblemData data(mask, p, s, rhs, zero, zero, zero);
    GridFunction w = solve_regularized(data, 1.0, config, u);
    w *= 1.0 / lp_norm(w, p, *mask);
    const double ratio = 1.0 / vector_lp_norm(plan.gradient(w), p);
    u = std::move(w);
    if (k > 0 && std::abs(ratio - previous) <= rel_tol * ratio) return ratio;
    previous = ratio;
  }
  throw NonConvergence("poincare_constant: inverse iteration did not settle", static_cast<std::size_t>(max_steps),
                       0.0);
}

double measure_interphase(const GridFunction& u, const GridFunction& v, double delta,
                          const OmegaMask& mask) {
  if (!(delta > 0.0)) throw InvalidArgument("measure_interphase: delta must be positive");
  if (!(u.grid() == mask.grid()) || !u.same_grid(v)) throw DomainError("measure_interphase: grid mismatch");
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (mask.inside(i) && std::abs(u[i] - v[i]) < delta) ++count;
  return static_cast<double>(count) * mask.grid().cell_volume();
}

NondegeneracyMap check_nondegeneracy(const ProblemData& data, const std::optional<GridFunction>& shift) {
  const OmegaMask& mask = data.mask();
  if (shift && !(shift->grid() == mask.grid())) throw DomainError("check_nondegeneracy: shift grid mismatch");
  NondegeneracyMap out;
  out.nodewise.assign(mask.grid().size(), 1);
  out.global = true;
  for (std::size_t i = 0; i < out.nodewise.size(); ++i) {
    if (!mask.inside(i)) continue;
    const double f_eff = data.f()[i] + (shift ? (*shift)[i] : 0.0);
    const bool ok = data.lambda_plus()[i] < f_eff || f_eff < -data.lambda_minus()[i];
    out.nodewise[i] = ok ? 1 : 0;
    out.global = out.global && ok;
  }
  return out;
}

}  // namespace fractwophase
