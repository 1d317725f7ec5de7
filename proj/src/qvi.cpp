#include "fractwophase/qvi.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <type_traits>

#include "fractwophase/parallel.hpp"

namespace fractwophase {

namespace {

void require_grid(const GridFunction& g, const OmegaMask& mask, const char* name) {
  if (g.size() == 0 || !(g.grid() == mask.grid()))
    throw ValidationError(std::string(name) + " must live on the problem grid");
}

std::vector<double> growth_samples() {
  std::vector<double> w;
  for (int i = -100; i <= 100; ++i) w.push_back(0.1 * i);
  for (double big : {1e2, 1e4, 1e8}) {
    w.push_back(big);
    w.push_back(-big);
  }
  return w;
}

}  // namespace

NemytskiiPhi NemytskiiPhi::make(Map map, GridFunction v0, double c1, double clamp_bound) {
  NemytskiiPhi phi;
  phi.map = map;
  phi.c1 = c1;
  phi.clamp_bound = clamp_bound;
  phi.phi0 = v0;
  for (std::size_t i = 0; i < phi.phi0.size(); ++i) phi.phi0[i] = std::abs(phi.phi0[i]);
  phi.v0 = std::move(v0);
  phi.C1 = std::abs(c1);
  return phi;
}

double NemytskiiPhi::evaluate(std::size_t node, double w) const {
  const double m = map == Map::Clamp ? std::clamp(w, -clamp_bound, clamp_bound) : std::tanh(w);
  return v0[node] + c1 * m;
}

UrysonPhi UrysonPhi::make(Kernel kernel, double amplitude, double width, Nonlinearity g, double clamp_bound) {
  UrysonPhi phi;
  phi.kernel = kernel;
  phi.amplitude = amplitude;
  phi.width = width;
  phi.g = g;
  phi.clamp_bound = clamp_bound;
  phi.C = std::abs(amplitude);
  return phi;
}

double UrysonPhi::k(std::array<double, 2> x, std::array<double, 2> y, int dim) const {
  if (kernel == Kernel::Constant) return amplitude;
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (x[a] - y[a]) * (x[a] - y[a]);
  return amplitude * std::exp(-r2 / (width * width));
}

double UrysonPhi::apply_g(double w) const {
  switch (g) {
    case Nonlinearity::Identity:
      return w;
    case Nonlinearity::Clamp:
      return std::clamp(w, -clamp_bound, clamp_bound);
    case Nonlinearity::Tanh:
      return std::tanh(w);
  }
  return w;
}

GridFunction truncation(const GridFunction& u, const GridFunction& g_minus, const GridFunction& g_plus) {
  if (!u.same_grid(g_minus) || !u.same_grid(g_plus)) throw DomainError("truncation: grid mismatch");
  GridFunction out = u;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(g_minus[i], std::min(u[i], g_plus[i]));
  return out;
}

void validate_phi(const PhiOperator& op, const ProblemData& data) {
  const OmegaMask& mask = data.mask();
  const int dim = mask.grid().dim();
  std::visit(
      [&](const auto& phi) {
        using T = std::decay_t<decltype(phi)>;
        if constexpr (std::is_same_v<T, NemytskiiPhi>) {
          require_grid(phi.v0, mask, "Nemytskii v0");
          require_grid(phi.phi0, mask, "Nemytskii phi0");
          if (!(phi.C1 >= 0.0) || !std::isfinite(phi.c1)) throw ValidationError("Nemytskii: C1 must be >= 0");
          if (phi.map == NemytskiiPhi::Map::Clamp && !(phi.clamp_bound >= 0.0))
            throw ValidationError("Nemytskii: clamp bound must be >= 0");
          const auto ws = growth_samples();
          for (std::size_t i = 0; i < mask.grid().size(); ++i) {
            if (!mask.inside(i)) continue;
            if (phi.phi0[i] < 0.0) throw ValidationError("Nemytskii: phi0 must be >= 0");
            for (double w : ws) {
              const double bound = phi.phi0[i] + phi.C1 * std::abs(w);
              if (std::abs(phi.evaluate(i, w)) > bound * (1.0 + 1e-12) + 1e-12)
                throw ValidationError("Nemytskii: |phi(x, w)| exceeds phi0(x) + C1 |w| (affine growth bound)");
            }
          }
        } else if constexpr (std::is_same_v<T, UrysonPhi>) {
          if (!std::isfinite(phi.amplitude)) throw ValidationError("Uryson: amplitude must be finite");
          if (phi.kernel == UrysonPhi::Kernel::Gaussian && !(phi.width > 0.0))
            throw ValidationError("Uryson: kernel width must be positive");
          if (!(phi.bound_phi >= 0.0) || !(phi.C >= 0.0))
            throw ValidationError("Uryson: bound constants must be >= 0");
          std::vector<std::size_t> nodes;
          const std::size_t stride = std::max<std::size_t>(1, mask.count() / 48);
          std::size_t seen = 0;
          for (std::size_t i = 0; i < mask.grid().size(); ++i)
            if (mask.inside(i) && seen++ % stride == 0) nodes.push_back(i);
          const auto ws = growth_samples();
          for (std::size_t a : nodes)
            for (std::size_t b : nodes) {
              const double kv = phi.k(mask.grid().point(a), mask.grid().point(b), dim);
              for (double w : ws)
                if (std::abs(kv * phi.apply_g(w)) > (phi.bound_phi + phi.C * std::abs(w)) * (1.0 + 1e-12) + 1e-12)
                  throw ValidationError("Uryson: |k(x,y) g(w)| exceeds phi(x,y) + C |w| (growth bound)");
            }
        } else if constexpr (std::is_same_v<T, AffineReflectionPhi>) {
          require_grid(phi.v0, mask, "AffineReflection v0");
        } else {
          require_grid(phi.g_minus, mask, "CoupledMembrane g_minus");
          require_grid(phi.g_plus, mask, "CoupledMembrane g_plus");
          if (!(phi.t >= data.s() && phi.t <= 1.0))
            throw ValidationError("CoupledMembrane: t must lie in [s, 1]");
          for (std::size_t i = 0; i < mask.grid().size(); ++i)
            if (mask.inside(i) && phi.g_minus[i] > phi.g_plus[i])
              throw ValidationError("CoupledMembrane: g_minus <= g_plus must hold on Omega");
        }
      },
      op);
}

GridFunction apply_phi(const PhiOperator& op, const GridFunction& u, const ProblemData& data,
                       const SolverConfig& inner) {
  const OmegaMask& mask = data.mask();
  if (!(u.grid() == mask.grid())) throw DomainError("apply_phi: grid mismatch");
  const BoxGrid& grid = mask.grid();
  return std::visit(
      [&](const auto& phi) -> GridFunction {
        using T = std::decay_t<decltype(phi)>;
        GridFunction out(u.grid_ptr());
        if constexpr (std::is_same_v<T, NemytskiiPhi>) {
          for (std::size_t i = 0; i < out.size(); ++i)
            if (mask.inside(i)) out[i] = phi.evaluate(i, u[i]);
        } else if constexpr (std::is_same_v<T, UrysonPhi>) {
          const double vol = grid.cell_volume();
          if (phi.kernel == UrysonPhi::Kernel::Constant) {
            double sum = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j)
              if (mask.inside(j)) sum += phi.apply_g(u[j]);
            for (std::size_t i = 0; i < out.size(); ++i)
              if (mask.inside(i)) out[i] = phi.amplitude * sum * vol;
          } else {
            std::vector<std::size_t> nodes;
            for (std::size_t j = 0; j < u.size(); ++j)
              if (mask.inside(j)) nodes.push_back(j);
            for (std::size_t i : nodes) {
              double sum = 0.0;
              for (std::size_t j : nodes) sum += phi.k(grid.point(i), grid.point(j), grid.dim()) * phi.apply_g(u[j]);
              out[i] = sum * vol;
            }
          }
        } else if constexpr (std::is_same_v<T, AffineReflectionPhi>) {
          for (std::size_t i = 0; i < out.size(); ++i)
            if (mask.inside(i)) out[i] = 2.0 * u[i] - phi.v0[i];
        } else {
          const GridFunction zero(u.grid_ptr());
          const ProblemData aux(data.mask_ptr(), data.p(), phi.t, truncation(u, phi.g_minus, phi.g_plus), zero,
                                zero, zero);
          return solve_regularized(aux, 1.0, inner);
        }
        out.mark_zero_outside(true);
        return out;
      },
      op);
}

void FixedPointConfig::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in (0, 1]");
  if (!(fp_tol > 0.0)) throw ValidationError("fp_tol must be positive");
  if (max_outer < 1) throw ValidationError("max_outer must be >= 1");
  inner.validate();
  reg.validate();
}

double qvi_apriori_radius(const ProblemData& data, const SolverConfig& config) {
  const double p = data.p();
  const OmegaMask& mask = data.mask();
  GridFunction load(data.grid_ptr());
  for (std::size_t i = 0; i < load.size(); ++i)
    if (mask.inside(i)) load[i] = std::abs(data.f()[i]) + data.lambda_plus()[i] + data.lambda_minus()[i];
  const double M = lp_norm(load, p / (p - 1.0), mask);
  const double cp = poincare_constant(data.mask_ptr(), p, data.s(), config);
  return cp * std::pow(cp * M, 1.0 / (p - 1.0));
}

QviResult solve_qvi(const ProblemData& data, const PhiOperator& op, const FixedPointConfig& fp) {
  fp.validate();
  validate_phi(op, data);
  QviResult result;
  result.apriori_radius = qvi_apriori_radius(data, fp.inner);
  // Inner solves are only accurate to the solver tolerance; 1% headroom absorbs that.
  const double radius = 1.01 * result.apriori_radius;
  const OmegaMask& mask = data.mask();
  const double p = data.p();

  auto check_ball = [&](const GridFunction& x, const char* what, int k) {
    const double norm = lp_norm(x, p, mask);
    if (norm > radius) {
      std::ostringstream os;
      os << "solve_qvi: a-priori bound violated by " << what << " at outer step " << k << ": ||.||_p = " << norm
         << " > R = " << result.apriori_radius << "; residual history:";
      for (double h : result.history) os << ' ' << h;
      throw Error(os.str());
    }
  };

  RegularizationParams final_stage = fp.reg;
  final_stage.eps0 = fp.reg.final_eps();
  final_stage.steps = 1;

  GridFunction u(data.grid_ptr());
  u.mark_zero_outside(true);
  std::optional<GridFunction> warm;
  for (int k = 0; k < fp.max_outer; ++k) {
    const GridFunction v = apply_phi(op, u, data, fp.inner);
    const ProblemData pd = data.with_v(v);
    // Later steps only move v slightly, so a single stage at the final eps from the previous state suffices.
    Solution S = warm ? solve_two_phase(pd, final_stage, fp.inner, warm) : solve_two_phase(pd, fp.reg, fp.inner);
    check_ball(S.u, "S(u_k)", k);
    const double res = lp_norm(u - S.u, 2.0);
    result.history.push_back(res);
    if (res <= fp.fp_tol * (1.0 + lp_norm(u, 2.0))) {
      result.iterate = std::move(u);
      result.solution = std::move(S);
      result.outer_iterations = k + 1;
      return result;
    }
    u *= 1.0 - fp.theta;
    u.axpy(fp.theta, S.u);
    check_ball(u, "u_k", k + 1);
    warm = std::move(S.u);
  }
  throw FixedPointNonConvergence("solve_qvi: fixed-point residual above fp_tol after max_outer iterations",
                                 result.history);
}

SweepReport qvi_s_sweep(const ProblemData& data, const PhiOperator& op, const std::vector<double>& s_list,
                        const FixedPointConfig& fp, const SweepOptions& options) {
  if (s_list.empty() || s_list.back() != 1.0) throw InvalidArgument("qvi_s_sweep: s_list must end at 1");
  for (std::size_t k = 1; k < s_list.size(); ++k)
    if (!(s_list[k] > s_list[k - 1])) throw InvalidArgument("qvi_s_sweep: s_list must be increasing");
  std::vector<std::optional<Solution>> sols(s_list.size());
  parallel_for(s_list.size(), [&](std::size_t k) {
    sols[k] = solve_qvi(data.with_s(s_list[k]), op, fp).solution;
  });
  std::vector<Solution> ordered;
  for (auto& s : sols) ordered.push_back(std::move(*s));
  const double floor = 10.0 * fp.inner.grad_tol * data.data_scale();
  return assemble_sweep(s_list, std::move(ordered), data.mask(), data.p(), floor, options);
}

}  // namespace fractwophase
