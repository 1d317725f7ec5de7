#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "fractwophase/qvi.hpp"

namespace testing {

using namespace fractwophase;

inline MaskPtr interval_mask(double a, double b, std::size_t n, double padding = 4.0) {
  const auto shape = OmegaShape::interval(a, b);
  return std::make_shared<const OmegaMask>(make_padded_grid(shape, n, padding), shape);
}

inline MaskPtr box_mask(std::array<double, 2> lo, std::array<double, 2> hi, std::size_t n, double padding = 4.0) {
  const auto shape = OmegaShape::box(lo, hi);
  return std::make_shared<const OmegaMask>(make_padded_grid(shape, n, padding), shape);
}

inline GridFunction constant(const MaskPtr& m, double c) { return GridFunction(m->grid_ptr(), c); }

inline ProblemData problem(const MaskPtr& m, double p, double s, const GridFunction& f, double lp, double lm,
                           const GridFunction& v) {
  return ProblemData(m, p, s, f, constant(m, lp), constant(m, lm), v);
}

inline GridFunction random_field(const GridPtr& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  GridFunction u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = dist(rng);
  return u;
}

inline VectorField random_vector_field(const GridPtr& g, std::uint64_t seed) {
  std::vector<GridFunction> comps;
  for (int k = 0; k < g->dim(); ++k) comps.push_back(random_field(g, seed * 31 + k));
  return VectorField(std::move(comps));
}

inline double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const GridFunction& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

/// Naive 1D DFT with the signed-frequency convention xi = m / L, used as an
/// independent oracle for multiplier identities.
inline std::vector<std::complex<double>> naive_dft(const GridFunction& u) {
  const std::size_t n = u.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += u[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(j) / double(n));
    out[k] = acc;
  }
  return out;
}

inline double signed_mode(std::size_t k, std::size_t n) {
  return k <= n / 2 ? double(k) : double(k) - double(n);
}

/// Applies |2 pi xi|^(2s) to a real 1D field by naive DFT.
inline GridFunction naive_fractional_laplacian(const GridFunction& u, double s) {
  const std::size_t n = u.size();
  const double L = u.grid().length(0);
  auto hat = naive_dft(u);
  GridFunction out(u.grid_ptr());
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double xi = signed_mode(k, n) / L;
      // The Nyquist bin carries no derivative (the gradient drops it).
      const double mult = (k == n / 2) ? 0.0 : std::pow(2.0 * std::numbers::pi * std::abs(xi), 2.0 * s);
      acc += mult * hat[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(k) * double(j) / double(n));
    }
    out[j] = acc.real() / double(n);
  }
  return out;
}

}  // namespace testing
