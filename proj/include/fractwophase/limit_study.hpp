#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fractwophase/solver.hpp"

namespace fractwophase {

/// Fixed dictionary of 6 smooth compactly supported bumps: centres on a
/// lattice inside the bounding box of Omega (6x1 in 1D, 3x2 in 2D), support
/// diameter diam(Omega)/4. Pairings integrate over Omega only.
std::vector<GridFunction> bump_battery(const OmegaMask& mask);

/// C-infinity bump exp(1 - 1/(1 - r^2)) with r = |x - centre| / radius, peak value 1.
GridFunction smooth_bump(const GridPtr& grid, std::array<double, 2> centre, double radius);

/// Row j holds int_Omega chi phi_j for every battery bump.
std::vector<double> battery_pairings(const GridFunction& chi, const std::vector<GridFunction>& battery,
                                     const OmegaMask& mask);

struct SweepReport {
  std::vector<double> s_values;  // includes the final s = 1 entry
  std::vector<double> grad_errors;  // ||D^s u_s - D u_1||_p, 0 for the last entry
  std::vector<std::vector<double>> pairings_gt;  // per s, per bump
  std::vector<std::vector<double>> pairings_lt;
  std::vector<double> pairing_gaps;  // max_j |pairing_s - pairing_1| over both phases
  std::optional<std::vector<double>> strong_phase_errors;  // L^r, only when the limit inter-phase is thin
  std::vector<double> interphase_measures;
  std::vector<Solution> solutions;
  double noise_floor = 0.0;  // 10x absolute solver tolerance at s = 1
};

/// Raised by s_sweep when a solve fails; partial() holds every completed entry.
class SweepNonConvergence : public NonConvergence {
 public:
  SweepNonConvergence(const NonConvergence& cause, double s, SweepReport partial);
  double failed_s() const { return s_; }
  const SweepReport& partial() const { return partial_; }

 private:
  double s_;
  SweepReport partial_;
};

struct SweepOptions {
  double r = 2.0;                    // exponent of the strong phase errors
  double interphase_fraction = 0.02; // limit inter-phase threshold, fraction of |Omega|
};

using DataFamily = std::function<ProblemData(double s)>;

/// Assembles the report from solutions ordered as s_values; the last entry is the s = 1 limit.
SweepReport assemble_sweep(const std::vector<double>& s_values, std::vector<Solution> solutions,
                           const OmegaMask& mask, double p, double noise_floor,
                           const SweepOptions& options = {});

/// Solves the family at every s (in parallel) and compares against s = 1.
/// s_list must be strictly increasing and end at 1.
SweepReport s_sweep(const DataFamily& family, const std::vector<double>& s_list,
                    const RegularizationParams& reg, const SolverConfig& config,
                    const SweepOptions& options = {});

struct PerturbationReport {
  std::vector<double> grad_errors;  // ||D^s (u_n - u)||_p
  std::vector<double> level_set_distances;  // ||v_n - v||_{q'} over Omega
  std::vector<double> pairing_gaps;
  std::vector<double> interphase_measures;
  double noise_floor = 0.0;
  std::vector<Solution> solutions;
  Solution reference;
};

PerturbationReport v_perturbation_study(const ProblemData& data, const std::vector<GridFunction>& v_list,
                                        const RegularizationParams& reg, const SolverConfig& config);

/// Nonincreasing, where a step may only increase while both values sit at or below `floor`.
bool decreasing_beyond_noise(const std::vector<double>& values, double floor);

/// Hard indicators {u > v} and {u < v}.
GridFunction indicator_gt(const Solution& sol, const OmegaMask& mask);
GridFunction indicator_lt(const Solution& sol, const OmegaMask& mask);

/// Per solution: max over both phases of the L^r(Omega) distance between hard
/// indicators and those of the limit u1. Refuses (UnsupportedRegime) when the
/// inter-phase of u1 exceeds interphase_fraction * |Omega|.
std::vector<double> characteristic_convergence_check(const std::vector<Solution>& solutions,
                                                     const Solution& u1, const OmegaMask& mask,
                                                     double r, double interphase_fraction = 0.02);

}  // namespace fractwophase
