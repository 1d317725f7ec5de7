#include "fractwophase/fractional.hpp"

#include <fftw3.h>

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <list>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

namespace fractwophase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFluxSmoothing = 1e-12;

// FFTW planning and plan destruction are not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double signed_frequency(std::size_t i, std::size_t n, double length) {
  const auto in = static_cast<long long>(i);
  const auto nn = static_cast<long long>(n);
  const long long m = (in < nn / 2) ? in : in - nn;
  return static_cast<double>(m) / length;
}

void check_exponent(double p, const char* where) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw InvalidArgument(std::string(where) + ": exponent p must be finite and > 1");
}

}  // namespace

FractionalOrder::FractionalOrder(double s) : s_(s) {
  if (!(s > 0.0 && s <= 1.0))
    throw InvalidArgument("fractional order must lie in (0, 1], got " + std::to_string(s));
}

SpectralPlan::SpectralPlan(GridPtr grid, FractionalOrder s) : grid_(std::move(grid)), s_(s.value()) {
  const BoxGrid& g = *grid_;
  const int d = g.dim();
  const std::size_t n0 = g.n(0);
  const std::size_t n1 = d == 2 ? g.n(1) : 1;
  const std::size_t last = (d == 1 ? n0 : n1) / 2 + 1;
  spectral_size_ = d == 1 ? last : n0 * last;

  multipliers_.assign(d, std::vector<double>(spectral_size_, 0.0));
  wavenumber_.assign(spectral_size_, 0.0);
  for (std::size_t b = 0; b < spectral_size_; ++b) {
    std::array<double, 2> xi{0.0, 0.0};
    std::array<bool, 2> nyquist{false, false};
    if (d == 1) {
      xi[0] = static_cast<double>(b) / g.length(0);
      nyquist[0] = (b == n0 / 2);
    } else {
      const std::size_t i = b / last;
      const std::size_t j = b % last;
      xi[0] = signed_frequency(i, n0, g.length(0));
      xi[1] = static_cast<double>(j) / g.length(1);
      nyquist[0] = (i == n0 / 2);
      nyquist[1] = (j == n1 / 2);
    }
    double k2 = 0.0;
    for (int k = 0; k < d; ++k) k2 += (kTwoPi * xi[k]) * (kTwoPi * xi[k]);
    const double kmod = std::sqrt(k2);
    wavenumber_[b] = kmod;
    if (kmod == 0.0) continue;
    const double radial = std::pow(kmod, s_ - 1.0);
    for (int k = 0; k < d; ++k) multipliers_[k][b] = nyquist[k] ? 0.0 : kTwoPi * xi[k] * radial;
  }

  std::vector<double> real(g.size());
  std::vector<std::complex<double>> spec(spectral_size_);
  auto* rp = real.data();
  auto* cp = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  if (d == 1) {
    forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n0), rp, cp, flags);
    inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n0), cp, rp, flags);
  } else {
    forward_plan_ = fftw_plan_dft_r2c_2d(static_cast<int>(n0), static_cast<int>(n1), rp, cp, flags);
    inverse_plan_ = fftw_plan_dft_c2r_2d(static_cast<int>(n0), static_cast<int>(n1), cp, rp, flags);
  }
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) throw Error("FFTW planning failed");
}

SpectralPlan::~SpectralPlan() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void SpectralPlan::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  // Out-of-place r2c leaves its input untouched.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void SpectralPlan::inverse(std::span<std::complex<double>> in, std::span<double> out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(out.size());
  for (double& x : out) x *= scale;
}

VectorField SpectralPlan::gradient(const GridFunction& u) const {
  if (!(u.grid() == *grid_)) throw DomainError("riesz_gradient: grid does not match plan");
  const int d = grid_->dim();
  std::vector<std::complex<double>> uhat(spectral_size_), work(spectral_size_);
  forward(u.values(), uhat);
  VectorField G(u.grid_ptr(), d);
  for (int k = 0; k < d; ++k) {
    const auto& m = multipliers_[k];
    for (std::size_t b = 0; b < spectral_size_; ++b)
      work[b] = std::complex<double>(-m[b] * uhat[b].imag(), m[b] * uhat[b].real());
    inverse(work, G[k].values());
  }
  return G;
}

GridFunction SpectralPlan::divergence(const VectorField& F) const {
  const int d = grid_->dim();
  if (F.dim() != d) throw DomainError("riesz_divergence: component count must equal dim");
  if (!(F.grid() == *grid_)) throw DomainError("riesz_divergence: grid does not match plan");
  std::vector<std::complex<double>> fhat(spectral_size_), acc(spectral_size_, 0.0);
  for (int k = 0; k < d; ++k) {
    forward(F[k].values(), fhat);
    const auto& m = multipliers_[k];
    for (std::size_t b = 0; b < spectral_size_; ++b)
      acc[b] += std::complex<double>(-m[b] * fhat[b].imag(), m[b] * fhat[b].real());
  }
  GridFunction out(F.grid_ptr());
  inverse(acc, out.values());
  out.mark_zero_outside(false);
  return out;
}

std::shared_ptr<const SpectralPlan> spectral_plan(const GridPtr& grid, FractionalOrder s) {
  struct Entry {
    GridPtr grid;
    double s;
    std::shared_ptr<const SpectralPlan> plan;
  };
  static std::mutex cache_mutex;
  static std::list<Entry> cache;
  constexpr std::size_t kCapacity = 32;

  std::lock_guard<std::mutex> lock(cache_mutex);
  for (auto it = cache.begin(); it != cache.end(); ++it) {
    if (it->s == s.value() && *it->grid == *grid) {
      cache.splice(cache.begin(), cache, it);
      return cache.front().plan;
    }
  }
  auto plan = std::make_shared<const SpectralPlan>(grid, s);
  cache.push_front({grid, s.value(), plan});
  if (cache.size() > kCapacity) cache.pop_back();
  return plan;
}

VectorField riesz_gradient(const GridFunction& u, FractionalOrder s) {
  return spectral_plan(u.grid_ptr(), s)->gradient(u);
}

GridFunction riesz_divergence(const VectorField& F, FractionalOrder s) {
  return spectral_plan(F.grid_ptr(), s)->divergence(F);
}

VectorField p_flux(const VectorField& G, double p) {
  check_exponent(p, "p_flux");
  VectorField out = G;
  if (p == 2.0) return out;
  const std::size_t n = G[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = G.magnitude(i);
    const double w = p > 2.0 ? std::pow(mag, p - 2.0)
                             : std::pow(mag * mag + kFluxSmoothing * kFluxSmoothing, 0.5 * (p - 2.0));
    for (int k = 0; k < out.dim(); ++k) out[k][i] *= w;
  }
  return out;
}

GridFunction fractional_p_laplacian_apply(const SpectralPlan& plan, const GridFunction& u, double p) {
  check_exponent(p, "fractional_p_laplacian_apply");
  GridFunction out = plan.divergence(p_flux(plan.gradient(u), p));
  out *= -1.0;
  return out;
}

GridFunction fractional_p_laplacian_apply(const GridFunction& u, FractionalOrder s, double p) {
  check_exponent(p, "fractional_p_laplacian_apply");
  return fractional_p_laplacian_apply(*spectral_plan(u.grid_ptr(), s), u, p);
}

double riesz_potential_constant(int dim, double alpha) {
  const double d = dim;
  return std::tgamma(0.5 * (d - alpha)) /
         (std::pow(std::numbers::pi, 0.5 * d) * std::pow(2.0, alpha) * std::tgamma(0.5 * alpha));
}

namespace {

// Integral of |x|^(-beta) over the cell [-h0/2, h0/2] x [-h1/2, h1/2] (2D) or
// [-h/2, h/2] (1D), beta < dim.
double self_cell_integral(int dim, double beta, double h0, double h1) {
  if (dim == 1) return 2.0 * std::pow(0.5 * h0, 1.0 - beta) / (1.0 - beta);
  // Polar coordinates: int_theta R(theta)^(2-beta) / (2-beta), R = distance to the rectangle edge.
  const double a = 0.5 * h0;
  const double b = 0.5 * h1;
  const double corner = std::atan2(b, a);
  auto radial = [&](double r) { return std::pow(r, 2.0 - beta) / (2.0 - beta); };
  using boost::math::quadrature::gauss;
  const double part1 = gauss<double, 30>::integrate(
      [&](double th) { return radial(a / std::cos(th)); }, 0.0, corner);
  const double part2 = gauss<double, 30>::integrate(
      [&](double th) { return radial(b / std::sin(th)); }, corner, 0.5 * std::numbers::pi);
  return 4.0 * (part1 + part2);
}

}  // namespace

VectorField dense_oracle_gradient(const GridFunction& u, FractionalOrder s) {
  const BoxGrid& g = u.grid();
  const int d = g.dim();
  if ((d == 1 && g.n(0) > 256) || (d == 2 && (g.n(0) > 64 || g.n(1) > 64)))
    throw OracleSizeError("dense_oracle_gradient: grid too large for the quadrature oracle");

  const std::size_t n0 = g.n(0);
  const std::size_t n1 = d == 2 ? g.n(1) : 1;
  const double h0 = g.spacing(0);
  const double h1 = d == 2 ? g.spacing(1) : 1.0;

  // Potential on the node lattice extended by one layer on every side.
  const std::size_t e0 = n0 + 2;
  const std::size_t e1 = d == 2 ? n1 + 2 : 1;
  std::vector<double> potential(e0 * e1, 0.0);
  auto ext = [&](std::size_t a, std::size_t b) -> double& { return potential[a * e1 + b]; };

  if (s.classical()) {
    for (std::size_t i = 0; i < n0; ++i)
      for (std::size_t j = 0; j < n1; ++j) ext(i + 1, d == 2 ? j + 1 : 0) = u[g.flat(i, j)];
  } else {
    const double alpha = 1.0 - s.value();
    const double beta = static_cast<double>(d) - alpha;  // kernel |x|^(-beta)
    const double c = riesz_potential_constant(d, alpha);
    const double vol = g.cell_volume();
    const double self = self_cell_integral(d, beta, h0, h1);
    std::vector<std::pair<std::array<double, 2>, double>> sources;
    for (std::size_t idx = 0; idx < u.size(); ++idx)
      if (u[idx] != 0.0) sources.push_back({g.point(idx), u[idx]});
    for (std::size_t a = 0; a < e0; ++a) {
      const double x0 = g.lower(0) + (static_cast<double>(a) - 0.5) * h0;
      for (std::size_t b = 0; b < e1; ++b) {
        const double x1 = d == 2 ? g.lower(1) + (static_cast<double>(b) - 0.5) * h1 : 0.0;
        double acc = 0.0;
        for (const auto& [y, val] : sources) {
          const double dx0 = (x0 - y[0]) / h0;
          const double dx1 = d == 2 ? (x1 - y[1]) / h1 : 0.0;
          if (std::abs(dx0) < 0.5 && std::abs(dx1) < 0.5) {
            acc += val * self;
          } else {
            const double r2 = (x0 - y[0]) * (x0 - y[0]) + (d == 2 ? (x1 - y[1]) * (x1 - y[1]) : 0.0);
            acc += val * vol * std::pow(r2, -0.5 * beta);
          }
        }
        ext(a, b) = c * acc;
      }
    }
  }

  VectorField G(u.grid_ptr(), d);
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const std::size_t a = i + 1;
      const std::size_t b = d == 2 ? j + 1 : 0;
      const std::size_t idx = g.flat(i, j);
      G[0][idx] = (ext(a + 1, b) - ext(a - 1, b)) / (2.0 * h0);
      if (d == 2) G[1][idx] = (ext(a, b + 1) - ext(a, b - 1)) / (2.0 * h1);
    }
  }
  return G;
}

MonotonicityGap monotonicity_gap(const GridFunction& u, const GridFunction& w, double s, double t,
                                 double p) {
  check_exponent(p, "monotonicity_gap");
  if (!u.same_grid(w)) throw DomainError("monotonicity_gap: grid mismatch");
  const VectorField Du = riesz_gradient(u, FractionalOrder(s));
  const VectorField Dw = riesz_gradient(w, FractionalOrder(t));
  const VectorField Fu = p_flux(Du, p);
  const VectorField Fw = p_flux(Dw, p);

  VectorField diff = Du;
  diff -= Dw;
  VectorField flux_diff = Fu;
  flux_diff -= Fw;

  MonotonicityGap gap;
  gap.lhs = inner(flux_diff, diff);
  const double dn = vector_lp_norm(diff, p);
  if (p >= 2.0) {
    gap.rhs = std::pow(2.0, 2.0 - p) * std::pow(dn, p);
  } else {
    const double denom = vector_lp_norm(Du, p) + vector_lp_norm(Dw, p);
    gap.rhs = denom > 0.0 ? (p - 1.0) * dn * dn / std::pow(denom, 2.0 - p) : 0.0;
  }
  return gap;
}

}  // namespace fractwophase
