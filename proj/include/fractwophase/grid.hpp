#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fractwophase/errors.hpp"

namespace fractwophase {

/// Uniform periodic box standing in for R^d. Nodes sit at cell centres,
/// x_i = lower + (i + 1/2) h, so rectangle-rule quadrature is the midpoint rule.
class BoxGrid {
 public:
  BoxGrid(int dim, std::array<double, 2> lower, std::array<double, 2> upper,
          std::array<std::size_t, 2> n, double padding_factor = 4.0);

  int dim() const { return dim_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double length(int axis) const { return upper_[axis] - lower_[axis]; }
  std::size_t n(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return length(axis) / static_cast<double>(n_[axis]); }
  double padding_factor() const { return padding_; }

  std::size_t size() const;
  double cell_volume() const;
  double box_measure() const;

  double coord(int axis, std::size_t i) const {
    return lower_[axis] + (static_cast<double>(i) + 0.5) * spacing(axis);
  }
  /// Coordinates of the node with flat (row-major) index `idx`.
  std::array<double, 2> point(std::size_t idx) const;
  std::size_t flat(std::size_t i, std::size_t j = 0) const { return dim_ == 1 ? i : i * n_[1] + j; }

  bool operator==(const BoxGrid& other) const;

 private:
  int dim_;
  std::array<double, 2> lower_;
  std::array<double, 2> upper_;
  std::array<std::size_t, 2> n_;
  double padding_;
};

using GridPtr = std::shared_ptr<const BoxGrid>;

/// Geometry of the bounded open set Omega.
struct OmegaShape {
  enum class Kind { Interval, Box, Ball };
  Kind kind = Kind::Interval;
  int dim = 1;
  std::array<double, 2> lower{0.0, 0.0};  // Interval / Box
  std::array<double, 2> upper{1.0, 1.0};
  std::array<double, 2> center{0.0, 0.0};  // Ball
  double radius = 1.0;

  static OmegaShape interval(double a, double b);
  static OmegaShape box(std::array<double, 2> lower, std::array<double, 2> upper);
  static OmegaShape ball(int dim, std::array<double, 2> center, double radius);

  bool contains(std::array<double, 2> x) const;
  double diameter() const;
  std::array<double, 2> bbox_lower() const;
  std::array<double, 2> bbox_upper() const;
  double measure() const;
};

/// Square padded box of side padding_factor * diam(Omega), centred on Omega.
GridPtr make_padded_grid(const OmegaShape& omega, std::size_t n, double padding_factor = 4.0);

class OmegaMask {
 public:
  /// Node-centre membership. Throws DomainError when Omega is empty on the
  /// grid or comes closer to the box boundary than the padding allows.
  OmegaMask(GridPtr grid, const OmegaShape& shape);
  /// Explicit node flags (no clearance check beyond non-emptiness).
  OmegaMask(GridPtr grid, std::vector<std::uint8_t> inside);

  const BoxGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  bool inside(std::size_t idx) const { return inside_[idx] != 0; }
  std::span<const std::uint8_t> flags() const { return inside_; }
  std::size_t count() const { return count_; }
  /// Discrete measure: count * cell volume.
  double measure() const;
  const OmegaShape* shape() const { return has_shape_ ? &shape_ : nullptr; }

 private:
  GridPtr grid_;
  std::vector<std::uint8_t> inside_;
  std::size_t count_ = 0;
  OmegaShape shape_;
  bool has_shape_ = false;
};

using MaskPtr = std::shared_ptr<const OmegaMask>;

class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(GridPtr grid, double value = 0.0);
  GridFunction(GridPtr grid, std::vector<double> values);

  const BoxGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  bool zero_outside_omega() const { return zero_outside_; }
  void mark_zero_outside(bool flag) { zero_outside_ = flag; }

  bool same_grid(const GridFunction& other) const;
  bool all_finite() const;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double c);
  /// this += c * x
  GridFunction& axpy(double c, const GridFunction& x);

 private:
  GridPtr grid_;
  std::vector<double> values_;
  bool zero_outside_ = false;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double c, GridFunction a);

struct VectorField {
  std::vector<GridFunction> components;

  VectorField() = default;
  explicit VectorField(std::vector<GridFunction> comps);
  VectorField(GridPtr grid, int dim);

  int dim() const { return static_cast<int>(components.size()); }
  const BoxGrid& grid() const { return components.front().grid(); }
  const GridPtr& grid_ptr() const { return components.front().grid_ptr(); }
  GridFunction& operator[](int k) { return components[k]; }
  const GridFunction& operator[](int k) const { return components[k]; }
  /// Euclidean magnitude at node i.
  double magnitude(std::size_t i) const;

  VectorField& operator-=(const VectorField& other);
};

enum class Region { Omega, Box };

/// (sum over region of |u_i|^p * cell volume)^(1/p). `mask` is required for Region::Omega.
double lp_norm(const GridFunction& u, double p, Region region = Region::Box,
               const OmegaMask* mask = nullptr);
inline double lp_norm(const GridFunction& u, double p, const OmegaMask& mask) {
  return lp_norm(u, p, Region::Omega, &mask);
}
double vector_lp_norm(const VectorField& F, double p);

/// Cell-volume weighted inner products.
double inner(const GridFunction& a, const GridFunction& b);
double inner(const VectorField& a, const VectorField& b);

GridFunction enforce_zero_extension(const GridFunction& u, const OmegaMask& mask);

/// Field whose value at each node is fn(x).
template <typename Fn>
GridFunction sample(const GridPtr& grid, Fn&& fn) {
  GridFunction out(grid);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(grid->point(i));
  return out;
}

}  // namespace fractwophase
