#include "fractwophase/limit_study.hpp"

#include <algorithm>
#include <cmath>

#include "fractwophase/parallel.hpp"

namespace fractwophase {

GridFunction smooth_bump(const GridPtr& grid, std::array<double, 2> centre, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("smooth_bump: radius must be positive");
  const int d = grid->dim();
  return sample(grid, [&](std::array<double, 2> x) {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) r2 += (x[k] - centre[k]) * (x[k] - centre[k]);
    r2 /= radius * radius;
    return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
  });
}

std::vector<GridFunction> bump_battery(const OmegaMask& mask) {
  const OmegaShape* shape = mask.shape();
  std::array<double, 2> lo{}, hi{};
  double diam = 0.0;
  if (shape) {
    lo = shape->bbox_lower();
    hi = shape->bbox_upper();
    diam = shape->diameter();
  } else {
    // Bounding box of the inside nodes.
    const BoxGrid& g = mask.grid();
    lo = {g.upper(0), g.dim() > 1 ? g.upper(1) : 0.0};
    hi = {g.lower(0), g.dim() > 1 ? g.lower(1) : 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask.inside(i)) continue;
      const auto x = g.point(i);
      for (int k = 0; k < g.dim(); ++k) {
        lo[k] = std::min(lo[k], x[k]);
        hi[k] = std::max(hi[k], x[k]);
      }
    }
    for (int k = 0; k < g.dim(); ++k) diam += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    diam = std::sqrt(diam);
  }
  const int d = mask.grid().dim();
  const double radius = diam / 8.0;
  std::vector<GridFunction> out;
  // Centres spread evenly over [lo + radius, hi - radius] so supports stay in the box.
  auto centre = [&](int axis, int i, int count) {
    const double a = lo[axis] + radius, b = hi[axis] - radius;
    return b > a ? a + i * (b - a) / (count - 1) : 0.5 * (lo[axis] + hi[axis]);
  };
  if (d == 1) {
    for (int j = 0; j < 6; ++j) out.push_back(smooth_bump(mask.grid_ptr(), {centre(0, j, 6), 0.0}, radius));
  } else {
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i)
        out.push_back(smooth_bump(mask.grid_ptr(), {centre(0, i, 3), centre(1, j, 2)}, radius));
  }
  return out;
}

std::vector<double> battery_pairings(const GridFunction& chi, const std::vector<GridFunction>& battery,
                                     const OmegaMask& mask) {
  std::vector<double> out;
  for (const auto& phi : battery) {
    double sum = 0.0;
    for (std::size_t i = 0; i < chi.size(); ++i)
      if (mask.inside(i)) sum += chi[i] * phi[i];
    out.push_back(sum * mask.grid().cell_volume());
  }
  return out;
}

SweepNonConvergence::SweepNonConvergence(const NonConvergence& cause, double s, SweepReport partial)
    : NonConvergence(std::string("s sweep failed at s = ") + std::to_string(s) + ": " + cause.what(),
                     cause.iterations(), cause.residual(), cause.stage()),
      s_(s),
      partial_(std::move(partial)) {}

GridFunction indicator_gt(const Solution& sol, const OmegaMask& mask) {
  GridFunction out(sol.u.grid_ptr());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask.inside(i) && sol.u[i] > sol.v[i]) out[i] = 1.0;
  out.mark_zero_outside(true);
  return out;
}

GridFunction indicator_lt(const Solution& sol, const OmegaMask& mask) {
  GridFunction out(sol.u.grid_ptr());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask.inside(i) && sol.u[i] < sol.v[i]) out[i] = 1.0;
  out.mark_zero_outside(true);
  return out;
}

std::vector<double> characteristic_convergence_check(const std::vector<Solution>& solutions,
                                                     const Solution& u1, const OmegaMask& mask,
                                                     double r, double interphase_fraction) {
  if (!(r >= 1.0)) throw InvalidArgument("characteristic_convergence_check: r must be >= 1");
  const double limit_band = measure_interphase(u1.u, u1.v, u1.diagnostics.final_eps, mask);
  if (limit_band > interphase_fraction * mask.measure())
    throw UnsupportedRegime("characteristic_convergence_check: the limit inter-phase has measure " +
                            std::to_string(limit_band) + " > " + std::to_string(interphase_fraction) +
                            " |Omega|; strong convergence of the characteristic functions is only "
                            "available when the inter-phase is negligible");
  const GridFunction gt1 = indicator_gt(u1, mask);
  const GridFunction lt1 = indicator_lt(u1, mask);
  auto distance = [&](const GridFunction& a, const GridFunction& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (mask.inside(i)) sum += std::pow(std::abs(a[i] - b[i]), r);
    return std::pow(sum * mask.grid().cell_volume(), 1.0 / r);
  };
  std::vector<double> out;
  for (const auto& sol : solutions) {
    if (!(sol.u.grid() == mask.grid())) throw DomainError("characteristic_convergence_check: grid mismatch");
    out.push_back(std::max(distance(indicator_gt(sol, mask), gt1), distance(indicator_lt(sol, mask), lt1)));
  }
  return out;
}

SweepReport assemble_sweep(const std::vector<double>& s_values, std::vector<Solution> solutions,
                           const OmegaMask& mask, double p, double noise_floor,
                           const SweepOptions& options) {
  if (s_values.size() != solutions.size() || solutions.empty())
    throw InvalidArgument("assemble_sweep: need one solution per s value");
  SweepReport rep;
  rep.s_values = s_values;
  rep.noise_floor = noise_floor;
  const auto battery = bump_battery(mask);
  const Solution& limit = solutions.back();
  const VectorField D1 = spectral_plan(mask.grid_ptr(), FractionalOrder(1.0))->gradient(limit.u);
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    const Solution& sol = solutions[k];
    VectorField diff = spectral_plan(mask.grid_ptr(), FractionalOrder(s_values[k]))->gradient(sol.u);
    diff -= D1;
    rep.grad_errors.push_back(vector_lp_norm(diff, p));
    rep.pairings_gt.push_back(battery_pairings(sol.chi_gt, battery, mask));
    rep.pairings_lt.push_back(battery_pairings(sol.chi_lt, battery, mask));
    rep.interphase_measures.push_back(sol.diagnostics.interphase_measure);
  }
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    double gap = 0.0;
    for (std::size_t j = 0; j < battery.size(); ++j) {
      gap = std::max(gap, std::abs(rep.pairings_gt[k][j] - rep.pairings_gt.back()[j]));
      gap = std::max(gap, std::abs(rep.pairings_lt[k][j] - rep.pairings_lt.back()[j]));
    }
    rep.pairing_gaps.push_back(gap);
  }
  try {
    rep.strong_phase_errors =
        characteristic_convergence_check(solutions, limit, mask, options.r, options.interphase_fraction);
  } catch (const UnsupportedRegime&) {
    rep.strong_phase_errors.reset();
  }
  rep.solutions = std::move(solutions);
  return rep;
}

SweepReport s_sweep(const DataFamily& family, const std::vector<double>& s_list,
                    const RegularizationParams& reg, const SolverConfig& config,
                    const SweepOptions& options) {
  if (s_list.empty() || s_list.back() != 1.0) throw InvalidArgument("s_sweep: s_list must end at 1");
  for (std::size_t k = 0; k < s_list.size(); ++k) {
    if (!(s_list[k] > 0.0 && s_list[k] <= 1.0)) throw InvalidArgument("s_sweep: s values must lie in (0, 1]");
    if (k > 0 && !(s_list[k] > s_list[k - 1])) throw InvalidArgument("s_sweep: s_list must be increasing");
  }
  std::vector<std::optional<ProblemData>> data(s_list.size());
  for (std::size_t k = 0; k < s_list.size(); ++k) data[k].emplace(family(s_list[k]));
  const OmegaMask& mask = data.back()->mask();
  for (const auto& d : data)
    if (!(d->mask().grid() == mask.grid())) throw DomainError("s_sweep: family members live on different grids");

  std::vector<std::optional<Solution>> sols(s_list.size());
  std::vector<std::optional<NonConvergence>> failures(s_list.size());
  parallel_for(s_list.size(), [&](std::size_t k) {
    try {
      sols[k] = solve_two_phase(*data[k], reg, config);
    } catch (const NonConvergence& e) {
      failures[k] = e;
    }
  });
  for (std::size_t k = 0; k < s_list.size(); ++k) {
    if (!failures[k]) continue;
    SweepReport partial;
    for (std::size_t j = 0; j < s_list.size(); ++j) {
      if (!sols[j]) continue;
      partial.s_values.push_back(s_list[j]);
      partial.interphase_measures.push_back(sols[j]->diagnostics.interphase_measure);
      partial.solutions.push_back(std::move(*sols[j]));
    }
    throw SweepNonConvergence(*failures[k], s_list[k], std::move(partial));
  }
  std::vector<Solution> ordered;
  for (auto& s : sols) ordered.push_back(std::move(*s));
  const double floor = 10.0 * config.grad_tol * data.back()->data_scale();
  return assemble_sweep(s_list, std::move(ordered), mask, data.back()->p(), floor, options);
}

PerturbationReport v_perturbation_study(const ProblemData& data, const std::vector<GridFunction>& v_list,
                                        const RegularizationParams& reg, const SolverConfig& config) {
  if (v_list.empty()) throw InvalidArgument("v_perturbation_study: empty v_list");
  const OmegaMask& mask = data.mask();
  PerturbationReport rep;
  rep.noise_floor = 10.0 * config.grad_tol * data.data_scale();
  std::vector<std::optional<ProblemData>> perturbed;
  for (const auto& v : v_list) perturbed.emplace_back(data.with_v(v));

  std::vector<std::optional<Solution>> sols(v_list.size() + 1);
  parallel_for(v_list.size() + 1, [&](std::size_t k) {
    sols[k] = solve_two_phase(k == 0 ? data : *perturbed[k - 1], reg, config);
  });
  rep.reference = std::move(*sols[0]);

  const SpectralPlan& plan = data.plan();
  const VectorField Du = plan.gradient(rep.reference.u);
  const auto battery = bump_battery(mask);
  const auto ref_gt = battery_pairings(rep.reference.chi_gt, battery, mask);
  const auto ref_lt = battery_pairings(rep.reference.chi_lt, battery, mask);
  const double qc = data.q_conjugate();
  for (std::size_t k = 0; k < v_list.size(); ++k) {
    Solution& sol = *sols[k + 1];
    VectorField diff = plan.gradient(sol.u);
    diff -= Du;
    rep.grad_errors.push_back(vector_lp_norm(diff, data.p()));
    const GridFunction dv = perturbed[k]->v() - data.v();
    rep.level_set_distances.push_back(qc == 1.0 ? l1_norm(dv, mask) : lp_norm(dv, qc, mask));
    const auto gt = battery_pairings(sol.chi_gt, battery, mask);
    const auto lt = battery_pairings(sol.chi_lt, battery, mask);
    double gap = 0.0;
    for (std::size_t j = 0; j < battery.size(); ++j)
      gap = std::max({gap, std::abs(gt[j] - ref_gt[j]), std::abs(lt[j] - ref_lt[j])});
    rep.pairing_gaps.push_back(gap);
    rep.interphase_measures.push_back(sol.diagnostics.interphase_measure);
    rep.solutions.push_back(std::move(sol));
  }
  return rep;
}

bool decreasing_beyond_noise(const std::vector<double>& values, double floor) {
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[k - 1] && values[k] > floor) return false;
  return true;
}

}  // namespace fractwophase
