#include "fractwophase/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fractwophase {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void require_same_grid(const GridFunction& a, const GridFunction& b, const char* where) {
  if (!a.same_grid(b)) throw DomainError(std::string(where) + ": grid mismatch");
}

}  // namespace

BoxGrid::BoxGrid(int dim, std::array<double, 2> lower, std::array<double, 2> upper,
                 std::array<std::size_t, 2> n, double padding_factor)
    : dim_(dim), lower_(lower), upper_(upper), n_(n), padding_(padding_factor) {
  if (dim != 1 && dim != 2) throw InvalidArgument("BoxGrid: dim must be 1 or 2");
  if (dim == 1) {
    lower_[1] = 0.0;
    upper_[1] = 1.0;
    n_[1] = 1;
  }
  for (int k = 0; k < dim; ++k) {
    if (n_[k] < 8 || !is_power_of_two(n_[k]))
      throw InvalidArgument("BoxGrid: nodes per axis must be a power of two >= 8, got " +
                            std::to_string(n_[k]));
    if (!(upper_[k] > lower_[k])) throw InvalidArgument("BoxGrid: upper must exceed lower");
  }
  if (!(padding_factor >= 1.0)) throw InvalidArgument("BoxGrid: padding_factor must be >= 1");
}

std::size_t BoxGrid::size() const { return dim_ == 1 ? n_[0] : n_[0] * n_[1]; }

double BoxGrid::cell_volume() const {
  double v = 1.0;
  for (int k = 0; k < dim_; ++k) v *= spacing(k);
  return v;
}

double BoxGrid::box_measure() const {
  double v = 1.0;
  for (int k = 0; k < dim_; ++k) v *= length(k);
  return v;
}

std::array<double, 2> BoxGrid::point(std::size_t idx) const {
  if (dim_ == 1) return {coord(0, idx), 0.0};
  return {coord(0, idx / n_[1]), coord(1, idx % n_[1])};
}

bool BoxGrid::operator==(const BoxGrid& other) const {
  if (dim_ != other.dim_) return false;
  for (int k = 0; k < dim_; ++k) {
    if (n_[k] != other.n_[k] || lower_[k] != other.lower_[k] || upper_[k] != other.upper_[k])
      return false;
  }
  return true;
}

OmegaShape OmegaShape::interval(double a, double b) {
  if (!(b > a)) throw InvalidArgument("interval: upper must exceed lower");
  OmegaShape s;
  s.kind = Kind::Interval;
  s.dim = 1;
  s.lower = {a, 0.0};
  s.upper = {b, 0.0};
  return s;
}

OmegaShape OmegaShape::box(std::array<double, 2> lower, std::array<double, 2> upper) {
  for (int k = 0; k < 2; ++k)
    if (!(upper[k] > lower[k])) throw InvalidArgument("box: upper must exceed lower");
  OmegaShape s;
  s.kind = Kind::Box;
  s.dim = 2;
  s.lower = lower;
  s.upper = upper;
  return s;
}

OmegaShape OmegaShape::ball(int dim, std::array<double, 2> center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("ball: radius must be positive");
  if (dim != 1 && dim != 2) throw InvalidArgument("ball: dim must be 1 or 2");
  OmegaShape s;
  s.kind = Kind::Ball;
  s.dim = dim;
  s.center = center;
  s.radius = radius;
  return s;
}

bool OmegaShape::contains(std::array<double, 2> x) const {
  switch (kind) {
    case Kind::Interval:
      return x[0] > lower[0] && x[0] < upper[0];
    case Kind::Box:
      return x[0] > lower[0] && x[0] < upper[0] && x[1] > lower[1] && x[1] < upper[1];
    case Kind::Ball: {
      double r2 = 0.0;
      for (int k = 0; k < dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
      return r2 < radius * radius;
    }
  }
  return false;
}

double OmegaShape::diameter() const {
  switch (kind) {
    case Kind::Interval:
      return upper[0] - lower[0];
    case Kind::Box:
      return std::hypot(upper[0] - lower[0], upper[1] - lower[1]);
    case Kind::Ball:
      return 2.0 * radius;
  }
  return 0.0;
}

std::array<double, 2> OmegaShape::bbox_lower() const {
  if (kind == Kind::Ball) return {center[0] - radius, center[1] - radius};
  return lower;
}

std::array<double, 2> OmegaShape::bbox_upper() const {
  if (kind == Kind::Ball) return {center[0] + radius, center[1] + radius};
  return upper;
}

double OmegaShape::measure() const {
  switch (kind) {
    case Kind::Interval:
      return upper[0] - lower[0];
    case Kind::Box:
      return (upper[0] - lower[0]) * (upper[1] - lower[1]);
    case Kind::Ball:
      return dim == 1 ? 2.0 * radius : std::numbers::pi * radius * radius;
  }
  return 0.0;
}

GridPtr make_padded_grid(const OmegaShape& omega, std::size_t n, double padding_factor) {
  if (!(padding_factor >= 2.0)) throw InvalidArgument("padding_factor must be >= 2");
  const double side = padding_factor * omega.diameter();
  const auto lo = omega.bbox_lower();
  const auto hi = omega.bbox_upper();
  std::array<double, 2> lower{}, upper{};
  for (int k = 0; k < omega.dim; ++k) {
    const double c = 0.5 * (lo[k] + hi[k]);
    lower[k] = c - 0.5 * side;
    upper[k] = c + 0.5 * side;
  }
  return std::make_shared<const BoxGrid>(omega.dim, lower, upper, std::array<std::size_t, 2>{n, n},
                                         padding_factor);
}

OmegaMask::OmegaMask(GridPtr grid, const OmegaShape& shape)
    : grid_(std::move(grid)), shape_(shape), has_shape_(true) {
  if (shape.dim != grid_->dim()) throw DomainError("OmegaMask: dimension mismatch");
  inside_.assign(grid_->size(), 0);
  const double clearance = 0.5 * (grid_->padding_factor() - 1.0) * shape.diameter();
  const auto lo = shape.bbox_lower();
  const auto hi = shape.bbox_upper();
  for (int k = 0; k < grid_->dim(); ++k) {
    // Relative slack absorbs the rounding in lower/upper of make_padded_grid.
    const double slack = 1e-9 * grid_->length(k);
    if (lo[k] - grid_->lower(k) < clearance - slack || grid_->upper(k) - hi[k] < clearance - slack)
      throw DomainError("OmegaMask: Omega is closer to the box boundary than the padding allows");
  }
  for (std::size_t i = 0; i < inside_.size(); ++i) {
    if (shape.contains(grid_->point(i))) {
      inside_[i] = 1;
      ++count_;
    }
  }
  if (count_ == 0) throw DomainError("OmegaMask: no node lies inside Omega");
}

OmegaMask::OmegaMask(GridPtr grid, std::vector<std::uint8_t> inside)
    : grid_(std::move(grid)), inside_(std::move(inside)) {
  if (inside_.size() != grid_->size()) throw DomainError("OmegaMask: flag count mismatch");
  count_ = static_cast<std::size_t>(std::count_if(inside_.begin(), inside_.end(),
                                                  [](std::uint8_t f) { return f != 0; }));
  if (count_ == 0) throw DomainError("OmegaMask: no node lies inside Omega");
}

double OmegaMask::measure() const { return static_cast<double>(count_) * grid_->cell_volume(); }

GridFunction::GridFunction(GridPtr grid, double value)
    : grid_(std::move(grid)), values_(grid_->size(), value), zero_outside_(value == 0.0) {}

GridFunction::GridFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw DomainError("GridFunction: value count mismatch");
}

bool GridFunction::same_grid(const GridFunction& other) const {
  return grid_ == other.grid_ || (grid_ && other.grid_ && *grid_ == *other.grid_);
}

bool GridFunction::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require_same_grid(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  zero_outside_ = zero_outside_ && other.zero_outside_;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require_same_grid(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  zero_outside_ = zero_outside_ && other.zero_outside_;
  return *this;
}

GridFunction& GridFunction::operator*=(double c) {
  for (double& x : values_) x *= c;
  return *this;
}

GridFunction& GridFunction::axpy(double c, const GridFunction& x) {
  require_same_grid(*this, x, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * x.values_[i];
  zero_outside_ = zero_outside_ && x.zero_outside_;
  return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double c, GridFunction a) { return a *= c; }

VectorField::VectorField(std::vector<GridFunction> comps) : components(std::move(comps)) {
  if (components.empty()) throw DomainError("VectorField: no components");
  for (const auto& c : components)
    if (!c.same_grid(components.front())) throw DomainError("VectorField: components on different grids");
}

VectorField::VectorField(GridPtr grid, int dim) {
  for (int k = 0; k < dim; ++k) components.emplace_back(grid);
}

double VectorField::magnitude(std::size_t i) const {
  if (components.size() == 1) return std::abs(components[0][i]);
  double s = 0.0;
  for (const auto& c : components) s += c[i] * c[i];
  return std::sqrt(s);
}

VectorField& VectorField::operator-=(const VectorField& other) {
  if (other.dim() != dim()) throw DomainError("VectorField: dimension mismatch");
  for (int k = 0; k < dim(); ++k) components[k] -= other.components[k];
  return *this;
}

double lp_norm(const GridFunction& u, double p, Region region, const OmegaMask* mask) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("lp_norm: exponent must be finite and > 1");
  if (region == Region::Omega) {
    if (mask == nullptr) throw DomainError("lp_norm: Omega region requires a mask");
    if (!(mask->grid() == u.grid())) throw DomainError("lp_norm: grid mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (region == Region::Omega && !mask->inside(i)) continue;
    const double a = std::abs(u[i]);
    sum += (p == 2.0) ? a * a : std::pow(a, p);
  }
  return std::pow(sum * u.grid().cell_volume(), 1.0 / p);
}

double vector_lp_norm(const VectorField& F, double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw InvalidArgument("vector_lp_norm: exponent must be finite and > 1");
  double sum = 0.0;
  const std::size_t n = F[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = F.magnitude(i);
    sum += (p == 2.0) ? a * a : std::pow(a, p);
  }
  return std::pow(sum * F.grid().cell_volume(), 1.0 / p);
}

double inner(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a, b, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_volume();
}

double inner(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw DomainError("inner: dimension mismatch");
  double s = 0.0;
  for (int k = 0; k < a.dim(); ++k) s += inner(a[k], b[k]);
  return s;
}

GridFunction enforce_zero_extension(const GridFunction& u, const OmegaMask& mask) {
  if (!(mask.grid() == u.grid())) throw DomainError("enforce_zero_extension: grid mismatch");
  GridFunction out = u;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!mask.inside(i)) out[i] = 0.0;
  out.mark_zero_outside(true);
  return out;
}

}  // namespace fractwophase
