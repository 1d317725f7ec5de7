#include "fractwophase/energy.hpp"

#include <cmath>
#include <sstream>

namespace fractwophase {

namespace {

void check_eps(double eps, const char* where) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw InvalidArgument(std::string(where) + ": eps must be positive and finite");
}

void require_zero_extended(const GridFunction& u, const OmegaMask& mask, const char* where) {
  if (!(u.grid() == mask.grid())) throw DomainError(std::string(where) + ": grid mismatch");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!mask.inside(i) && u[i] != 0.0)
      throw DomainError(std::string(where) + ": argument must vanish outside Omega");
}

double gradient_energy(const VectorField& G, double p) {
  double sum = 0.0;
  const std::size_t n = G[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = G.magnitude(i);
    sum += p == 2.0 ? a * a : std::pow(a, p);
  }
  return sum * G.grid().cell_volume() / p;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

SobolevExponents sobolev_exponents(double p, double s, int d) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("sobolev_exponents: p must be finite and > 1");
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("sobolev_exponents: s must lie in (0, 1]");
  if (d != 1 && d != 2) throw InvalidArgument("sobolev_exponents: d must be 1 or 2");
  SobolevExponents e;
  const double sp = s * p;
  const double dd = d;
  if (sp < dd) {
    e.p_star = dd * p / (dd - sp);
    e.p_sharp = dd * p / (dd * (p - 1.0) + sp);
  } else if (sp > dd) {
    e.p_sharp = 1.0;
  } else {
    e.p_sharp = 1.0 + 1e-6;
    e.borderline = true;
  }
  return e;
}

ProblemData::ProblemData(MaskPtr mask, double p, double s, GridFunction f, GridFunction lambda_plus,
                         GridFunction lambda_minus, GridFunction v, double q)
    : mask_(std::move(mask)), p_(p), s_(s), q_(q) {
  if (!mask_) throw DomainError("ProblemData: missing mask");
  if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("p must be finite and > 1");
  if (!(s > 0.0 && s <= 1.0)) throw ValidationError("s must lie in (0, 1]");
  exponents_ = sobolev_exponents(p, s, mask_->grid().dim());
  if (exponents_.borderline)
    warnings_.push_back("sp == d: p#_s is not determined, using the sentinel 1 + 1e-6");
  if (!(q > exponents_.p_sharp))
    throw ValidationError("q = " + fmt(q) + " <= p#_s = " + fmt(exponents_.p_sharp) +
                          " violates the integrability assumption q > p#_s on lambda_+-");
  if (!(q_conjugate() < exponents_.p_star))
    throw ValidationError("q' = " + fmt(q_conjugate()) + " >= p*_s = " + fmt(exponents_.p_star) +
                          " violates the assumption v in L^q' with q' < p*_s");

  auto adopt = [&](GridFunction& field, GridFunction src, const char* name) {
    if (!(src.grid() == mask_->grid()))
      throw DomainError(std::string("ProblemData: ") + name + " lives on a different grid");
    if (!src.all_finite()) throw ValidationError(std::string(name) + " contains non-finite values");
    field = enforce_zero_extension(src, *mask_);
  };
  adopt(f_, std::move(f), "f");
  adopt(lambda_plus_, std::move(lambda_plus), "lambda_plus");
  adopt(lambda_minus_, std::move(lambda_minus), "lambda_minus");
  adopt(v_, std::move(v), "v");
  for (std::size_t i = 0; i < f_.size(); ++i) {
    if (lambda_plus_[i] < 0.0) throw ValidationError("lambda_plus must be >= 0 (lambda_+- >= 0 a.e.)");
    if (lambda_minus_[i] < 0.0) throw ValidationError("lambda_minus must be >= 0 (lambda_+- >= 0 a.e.)");
  }
  plan_ = spectral_plan(mask_->grid_ptr(), FractionalOrder(s_));
}

double ProblemData::q_conjugate() const {
  if (std::isinf(q_)) return 1.0;
  if (q_ <= 1.0) return std::numeric_limits<double>::infinity();
  return q_ / (q_ - 1.0);
}

ProblemData ProblemData::with_v(GridFunction v) const {
  return ProblemData(mask_, p_, s_, f_, lambda_plus_, lambda_minus_, std::move(v), q_);
}

ProblemData ProblemData::with_s(double s) const {
  return ProblemData(mask_, p_, s, f_, lambda_plus_, lambda_minus_, v_, q_);
}

ProblemData ProblemData::with_f(GridFunction f) const {
  return ProblemData(mask_, p_, s_, std::move(f), lambda_plus_, lambda_minus_, v_, q_);
}

ProblemData ProblemData::with_lambdas(GridFunction lambda_plus, GridFunction lambda_minus) const {
  return ProblemData(mask_, p_, s_, f_, std::move(lambda_plus), std::move(lambda_minus), v_, q_);
}

double ProblemData::data_scale() const {
  return 1.0 + lp_norm(f_, 2.0, *mask_) + lp_norm(lambda_plus_, 2.0, *mask_) +
         lp_norm(lambda_minus_, 2.0, *mask_);
}

bool ProblemData::lambdas_vanish() const {
  for (std::size_t i = 0; i < f_.size(); ++i)
    if (lambda_plus_[i] != 0.0 || lambda_minus_[i] != 0.0) return false;
  return true;
}

void RegularizationParams::validate() const {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw ValidationError("eps0 must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("ratio must lie in (0, 1)");
  if (steps < 1) throw ValidationError("steps must be >= 1");
}

double RegularizationParams::eps(int k) const { return eps0 * std::pow(ratio, k); }

double smoothed_heaviside(double t, double eps) {
  check_eps(eps, "smoothed_heaviside");
  if (t <= 0.0) return 0.0;
  if (t >= eps) return 1.0;
  return t / eps;
}

double smoothed_positive_part(double t, double eps) {
  check_eps(eps, "smoothed_positive_part");
  if (t <= 0.0) return 0.0;
  if (t >= eps) return t - 0.5 * eps;
  return 0.5 * t * t / eps;
}

double phase_energy(const GridFunction& w, const ProblemData& data) {
  const OmegaMask& mask = data.mask();
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!mask.inside(i)) continue;
    const double t = w[i] - data.v()[i];
    sum += t > 0.0 ? data.lambda_plus()[i] * t : -data.lambda_minus()[i] * t;
  }
  return sum * mask.grid().cell_volume();
}

double energy(const GridFunction& u, const ProblemData& data) {
  require_zero_extended(u, data.mask(), "energy");
  const OmegaMask& mask = data.mask();
  double linear = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (mask.inside(i)) linear += data.f()[i] * u[i];
  return gradient_energy(data.plan().gradient(u), data.p()) + phase_energy(u, data) -
         linear * mask.grid().cell_volume();
}

namespace {

double regularized_data_terms(const GridFunction& u, const ProblemData& data, double eps) {
  const OmegaMask& mask = data.mask();
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!mask.inside(i)) continue;
    const double t = u[i] - data.v()[i];
    sum += data.lambda_plus()[i] * smoothed_positive_part(t, eps) +
           data.lambda_minus()[i] * smoothed_positive_part(-t, eps) - data.f()[i] * u[i];
  }
  return sum * mask.grid().cell_volume();
}

}  // namespace

double energy_regularized(const GridFunction& u, const ProblemData& data, double eps) {
  check_eps(eps, "energy_regularized");
  require_zero_extended(u, data.mask(), "energy_regularized");
  return gradient_energy(data.plan().gradient(u), data.p()) + regularized_data_terms(u, data, eps);
}

RegularizedEvaluation evaluate_regularized(const GridFunction& u, const ProblemData& data, double eps) {
  check_eps(eps, "evaluate_regularized");
  require_zero_extended(u, data.mask(), "evaluate_regularized");
  const SpectralPlan& plan = data.plan();
  const VectorField G = plan.gradient(u);
  RegularizedEvaluation out;
  out.energy = gradient_energy(G, data.p()) + regularized_data_terms(u, data, eps);
  GridFunction r = plan.divergence(p_flux(G, data.p()));
  const OmegaMask& mask = data.mask();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!mask.inside(i)) {
      r[i] = 0.0;
      continue;
    }
    const double t = u[i] - data.v()[i];
    r[i] = -r[i] + data.lambda_plus()[i] * smoothed_heaviside(t, eps) -
           data.lambda_minus()[i] * smoothed_heaviside(-t, eps) - data.f()[i];
  }
  r.mark_zero_outside(true);
  out.residual = std::move(r);
  return out;
}

GridFunction first_variation(const GridFunction& u, const ProblemData& data, double eps) {
  return evaluate_regularized(u, data, eps).residual;
}

ZetaFields zeta_from_state(const GridFunction& u, const ProblemData& data, double eps) {
  check_eps(eps, "zeta_from_state");
  if (!(u.grid() == data.mask().grid())) throw DomainError("zeta_from_state: grid mismatch");
  const OmegaMask& mask = data.mask();
  ZetaFields z{GridFunction(u.grid_ptr()), GridFunction(u.grid_ptr()), GridFunction(u.grid_ptr())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!mask.inside(i)) continue;
    const double t = u[i] - data.v()[i];
    z.chi_gt[i] = smoothed_heaviside(t, eps);
    z.chi_lt[i] = smoothed_heaviside(-t, eps);
    z.zeta[i] = data.lambda_plus()[i] * z.chi_gt[i] - data.lambda_minus()[i] * z.chi_lt[i];
  }
  for (auto* g : {&z.zeta, &z.chi_gt, &z.chi_lt}) g->mark_zero_outside(true);
  return z;
}

double l1_norm(const GridFunction& u, const OmegaMask& mask) {
  if (!(u.grid() == mask.grid())) throw DomainError("l1_norm: grid mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (mask.inside(i)) sum += std::abs(u[i]);
  return sum * mask.grid().cell_volume();
}

}  // namespace fractwophase
