#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "fractwophase/grid.hpp"

namespace fractwophase {

/// Order s of the Riesz gradient, 0 < s <= 1. s == 1 is the classical gradient.
class FractionalOrder {
 public:
  explicit FractionalOrder(double s);
  double value() const { return s_; }
  bool classical() const { return s_ == 1.0; }

 private:
  double s_;
};

/// Frequency-domain realisation of D^s on a periodic BoxGrid.
///
/// Component k of D^s acts as multiplication by i * m_k(xi) with
/// m_k(xi) = 2 pi xi_k |2 pi xi|^(s-1). The zero frequency and, for component
/// k, the Nyquist bin along axis k carry a zero multiplier; this keeps the
/// output real and makes the divergence the exact negative adjoint.
/// Construction is serialised internally; a built plan is immutable.
class SpectralPlan {
 public:
  SpectralPlan(GridPtr grid, FractionalOrder s);
  ~SpectralPlan();
  SpectralPlan(const SpectralPlan&) = delete;
  SpectralPlan& operator=(const SpectralPlan&) = delete;

  const BoxGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  double order() const { return s_; }
  std::size_t spectral_size() const { return spectral_size_; }
  /// Real factor m_k; the multiplier is i * m_k.
  std::span<const double> multiplier(int axis) const { return multipliers_[axis]; }
  /// |2 pi xi| per spectral bin.
  std::span<const double> wavenumber() const { return wavenumber_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Normalised inverse (includes the 1/N factor). `in` is consumed as scratch.
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const;

  VectorField gradient(const GridFunction& u) const;
  GridFunction divergence(const VectorField& F) const;

 private:
  GridPtr grid_;
  double s_;
  std::size_t spectral_size_ = 0;
  std::vector<std::vector<double>> multipliers_;
  std::vector<double> wavenumber_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Shared plan for (grid, s); plans are cached process-wide.
std::shared_ptr<const SpectralPlan> spectral_plan(const GridPtr& grid, FractionalOrder s);

VectorField riesz_gradient(const GridFunction& u, FractionalOrder s);
GridFunction riesz_divergence(const VectorField& F, FractionalOrder s);

/// |G|^(p-2) G nodewise. For p < 2 the modulus is smoothed as
/// (|G|^2 + delta^2)^((p-2)/2) with delta = 1e-12.
VectorField p_flux(const VectorField& G, double p);

/// Returns -Delta^s_p u = -D^s . (|D^s u|^(p-2) D^s u).
GridFunction fractional_p_laplacian_apply(const GridFunction& u, FractionalOrder s, double p);
GridFunction fractional_p_laplacian_apply(const SpectralPlan& plan, const GridFunction& u, double p);

/// Test oracle: Riesz potential of order 1-s by direct kernel quadrature on the
/// non-periodic box, followed by central differencing. Limited to n <= 256 in
/// 1D and 64x64 in 2D (OracleSizeError otherwise).
VectorField dense_oracle_gradient(const GridFunction& u, FractionalOrder s);

/// Normalising constant of the Riesz potential I_alpha, kernel |x|^(alpha-d).
double riesz_potential_constant(int dim, double alpha);

struct MonotonicityGap {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = int (|D^s u|^(p-2) D^s u - |D^t w|^(p-2) D^t w) . (D^s u - D^t w),
/// rhs = the strong-monotonicity lower bound with alpha_p = 2^(2-p) (p >= 2)
/// or p - 1 (p < 2).
MonotonicityGap monotonicity_gap(const GridFunction& u, const GridFunction& w, double s, double t,
                                 double p);

}  // namespace fractwophase
