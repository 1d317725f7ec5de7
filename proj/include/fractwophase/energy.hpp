#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fractwophase/fractional.hpp"
#include "fractwophase/grid.hpp"

namespace fractwophase {

struct SobolevExponents {
  double p_star = std::numeric_limits<double>::infinity();  // p*_s, +inf when sp >= d
  double p_sharp = 1.0;                                     // p#_s = (p*_s)'
  bool borderline = false;                                  // sp == d: p_sharp is a sentinel
};

/// p*_s = dp/(d - sp) and p#_s = dp/(d(p-1) + sp) for sp < d; p#_s = 1 for sp > d.
/// At sp == d the conjugate is only known to exceed 1 and 1 + 1e-6 is returned.
SobolevExponents sobolev_exponents(double p, double s, int d);

/// Problem data (p, s, f, lambda_+, lambda_-, v, q) on a masked grid.
/// Construction enforces lambda_+- >= 0, q > p#_s and q' < p*_s.
class ProblemData {
 public:
  ProblemData(MaskPtr mask, double p, double s, GridFunction f, GridFunction lambda_plus,
              GridFunction lambda_minus, GridFunction v,
              double q = std::numeric_limits<double>::infinity());

  const OmegaMask& mask() const { return *mask_; }
  const MaskPtr& mask_ptr() const { return mask_; }
  const GridPtr& grid_ptr() const { return mask_->grid_ptr(); }
  double p() const { return p_; }
  double s() const { return s_; }
  double q() const { return q_; }
  double q_conjugate() const;
  const SobolevExponents& exponents() const { return exponents_; }
  const GridFunction& f() const { return f_; }
  const GridFunction& lambda_plus() const { return lambda_plus_; }
  const GridFunction& lambda_minus() const { return lambda_minus_; }
  const GridFunction& v() const { return v_; }
  const SpectralPlan& plan() const { return *plan_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Copies with one ingredient replaced (validation re-runs).
  ProblemData with_v(GridFunction v) const;
  ProblemData with_s(double s) const;
  ProblemData with_f(GridFunction f) const;
  ProblemData with_lambdas(GridFunction lambda_plus, GridFunction lambda_minus) const;

  /// 1 + ||f||_2 + ||lambda_+||_2 + ||lambda_-||_2 over Omega; the scale for residual tolerances.
  double data_scale() const;
  bool lambdas_vanish() const;

 private:
  MaskPtr mask_;
  double p_;
  double s_;
  double q_;
  SobolevExponents exponents_;
  GridFunction f_;
  GridFunction lambda_plus_;
  GridFunction lambda_minus_;
  GridFunction v_;
  std::shared_ptr<const SpectralPlan> plan_;
  std::vector<std::string> warnings_;
};

/// Geometric eps schedule eps_k = eps0 * ratio^k, k = 0..steps-1.
struct RegularizationParams {
  double eps0 = 1.0;
  double ratio = 0.5;
  int steps = 12;

  void validate() const;
  double eps(int k) const;
  double final_eps() const { return eps(steps - 1); }
};

/// H_eps(t): 0 for t <= 0, t/eps on [0, eps], 1 for t >= eps.
double smoothed_heaviside(double t, double eps);
/// G_eps(t): 0 for t <= 0, t^2/(2 eps) on [0, eps], t - eps/2 for t >= eps.
double smoothed_positive_part(double t, double eps);

/// J(w) = (1/p) int_box |D^s w|^p + int_Omega [lambda_+ (w-v)^+ + lambda_- (w-v)^-] - int_Omega f w.
double energy(const GridFunction& u, const ProblemData& data);
/// As energy() with (w-v)^+ -> G_eps(w-v) and (w-v)^- -> G_eps(v-w).
double energy_regularized(const GridFunction& u, const ProblemData& data, double eps);

/// Gateaux derivative of energy_regularized in zero-extended directions:
/// R = -Delta^s_p u + lambda_+ H_eps(u-v) - lambda_- H_eps(v-u) - f on Omega, 0 outside.
GridFunction first_variation(const GridFunction& u, const ProblemData& data, double eps);

struct RegularizedEvaluation {
  double energy = 0.0;
  GridFunction residual;
};
/// energy_regularized and first_variation sharing one gradient evaluation.
RegularizedEvaluation evaluate_regularized(const GridFunction& u, const ProblemData& data, double eps);

struct ZetaFields {
  GridFunction zeta;
  GridFunction chi_gt;
  GridFunction chi_lt;
};
/// zeta = lambda_+ H_eps(u-v) - lambda_- H_eps(v-u), chi_gt = H_eps(u-v), chi_lt = H_eps(v-u) on Omega.
ZetaFields zeta_from_state(const GridFunction& u, const ProblemData& data, double eps);

/// Psi_v(w) = int_Omega lambda_+ (w-v)^+ + lambda_- (w-v)^-.
double phase_energy(const GridFunction& w, const ProblemData& data);

/// Cell-volume weighted sum of |u| over Omega.
double l1_norm(const GridFunction& u, const OmegaMask& mask);

}  // namespace fractwophase
