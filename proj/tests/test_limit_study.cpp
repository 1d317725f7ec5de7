#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace testing;

namespace {

const std::vector<double> default_s{0.5, 0.7, 0.85, 0.95, 0.99, 1.0};

SolverConfig tight(double tol = 1e-10) {
  SolverConfig c;
  c.grad_tol = tol;
  return c;
}

RegularizationParams schedule(int steps = 8) {
  RegularizationParams r;
  r.steps = steps;
  return r;
}

GridFunction on_omega(const MaskPtr& m, double (*fn)(double)) {
  GridFunction u(m->grid_ptr());
  for (std::size_t i = 0; i < u.size(); ++i)
    if (m->inside(i)) u[i] = fn(m->grid().point(i)[0]);
  return u;
}

Solution fake_solution(const GridFunction& u, const GridFunction& v, double eps) {
  Solution s;
  s.u = u;
  s.v = v;
  s.chi_gt = GridFunction(u.grid_ptr());
  s.chi_lt = GridFunction(u.grid_ptr());
  s.zeta = GridFunction(u.grid_ptr());
  s.diagnostics.final_eps = eps;
  return s;
}

}  // namespace

TEST_CASE("bump battery: six unit-height bumps supported in Omega") {
  const auto m = interval_mask(-1, 1, 1024);
  const auto battery = bump_battery(*m);
  REQUIRE(battery.size() == 6);
  for (const auto& b : battery) {
    CHECK(max_abs(b) == doctest::Approx(1.0).epsilon(2e-2));
    double width = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] > 0.0) {
        CHECK(m->inside(i));
        width += m->grid().spacing(0);
      }
    }
    CHECK(width == doctest::Approx(0.5).epsilon(2e-2));
  }
  const auto box = box_mask({0, 0}, {1, 1}, 64);
  CHECK(bump_battery(*box).size() == 6);
  const auto pairs = battery_pairings(enforce_zero_extension(constant(m, 1.0), *m), battery, *m);
  // Integral of exp(1 - 1/(1 - r^2)) over (-1, 1) is 1.20690..., scaled by the radius 1/4.
  for (double v : pairs) CHECK(v == doctest::Approx(0.25 * 1.2069003).epsilon(1e-4));
}

TEST_CASE("constant family without multipliers: gradient errors strictly decrease") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const auto f = enforce_zero_extension(constant(m, 1.0), *m);
  const auto family = [&](double s) { return problem(m, 2.0, s, f, 0.0, 0.0, zero); };
  const auto rep = s_sweep(family, default_s, schedule(4), tight());
  REQUIRE(rep.grad_errors.size() == default_s.size());
  CHECK(rep.grad_errors.back() == 0.0);
  for (std::size_t k = 1; k < rep.grad_errors.size(); ++k) CHECK(rep.grad_errors[k] < rep.grad_errors[k - 1]);
  CHECK(rep.pairings_gt.size() == default_s.size());
  CHECK(rep.pairing_gaps.size() == default_s.size());
  CHECK(rep.interphase_measures.size() == default_s.size());
}

TEST_CASE("zero data sweep has zero errors") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto family = [&](double s) { return problem(m, 3.0, s, zero, 1.0, 1.0, zero); };
  const auto rep = s_sweep(family, default_s, schedule(4), tight());
  for (double e : rep.grad_errors) CHECK(e == 0.0);
  for (double g : rep.pairing_gaps) CHECK(g == 0.0);
}

TEST_CASE("nondegenerate limit: strong phase errors decrease and end small") {
  const auto m = interval_mask(-1, 1, 1024);
  const auto zero = constant(m, 0.0);
  const auto f = on_omega(m, [](double x) { return x > 0 ? 3.0 : -3.0; });
  const auto family = [&](double s) { return problem(m, 2.0, s, f, 1.0, 1.0, zero); };
  REQUIRE(check_nondegeneracy(family(1.0)).global);
  SweepOptions opt;
  const auto rep = s_sweep(family, default_s, schedule(), tight(), opt);
  REQUIRE(rep.strong_phase_errors.has_value());
  const auto& strong = *rep.strong_phase_errors;
  REQUIRE(strong.size() == default_s.size());
  for (std::size_t k = 1; k + 1 < strong.size(); ++k) CHECK(strong[k] <= strong[k - 1]);
  CHECK(strong[strong.size() - 2] <= 0.05 * std::pow(m->measure(), 1.0 / opt.r));
  CHECK(strong.back() == 0.0);
  for (const auto& sol : rep.solutions) {
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
      CHECK(sol.chi_gt[i] + sol.chi_lt[i] <= 1.0);
      CHECK(sol.zeta[i] == doctest::Approx(sol.chi_gt[i] - sol.chi_lt[i]));
    }
  }
  for (const auto& row : rep.pairings_gt)
    for (double v : row) CHECK(std::isfinite(v));
  CHECK(decreasing_beyond_noise(rep.grad_errors, rep.noise_floor));
  const auto direct = characteristic_convergence_check(rep.solutions, rep.solutions.back(), *m, opt.r);
  for (std::size_t k = 0; k < strong.size(); ++k) CHECK(direct[k] == doctest::Approx(strong[k]));
}

TEST_CASE("s = 1 sweep entry uses the plain spectral derivative") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto f = on_omega(m, [](double x) { return 2.0 + x; });
  const auto family = [&](double s) { return problem(m, 2.0, s, f, 1.0, 0.5, zero); };
  const auto rep = s_sweep(family, {0.9, 1.0}, schedule(4), tight());
  const GridFunction& u = rep.solutions.back().u;
  const auto hat = naive_dft(u);
  const std::size_t n = u.size();
  const double L = m->grid().length(0);
  GridFunction du(m->grid_ptr());
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == n / 2) continue;
      const double xi = signed_mode(k, n) / L;
      acc += std::complex<double>(0.0, 2.0 * std::numbers::pi * xi) * hat[k] *
             std::polar(1.0, 2.0 * std::numbers::pi * double(k) * double(j) / double(n));
    }
    du[j] = acc.real() / double(n);
  }
  CHECK(max_abs_diff(riesz_gradient(u, FractionalOrder(1.0))[0], du) <= 1e-10 * (1.0 + max_abs(du)));
}

TEST_CASE("sweep argument checks") {
  const auto m = interval_mask(-1, 1, 64);
  const auto zero = constant(m, 0.0);
  const auto family = [&](double s) { return problem(m, 2.0, s, zero, 0.0, 0.0, zero); };
  CHECK_THROWS_AS(s_sweep(family, {0.5, 0.9}, schedule(2), tight()), InvalidArgument);
  CHECK_THROWS_AS(s_sweep(family, {0.9, 0.5, 1.0}, schedule(2), tight()), InvalidArgument);
}

TEST_CASE("sweep failure keeps the completed entries") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto f = enforce_zero_extension(constant(m, 1.0), *m);
  const auto family = [&](double s) { return problem(m, 2.0, s, f, 0.0, 0.0, zero); };
  SolverConfig few = tight(1e-12);
  few.max_iters = 1;
  try {
    s_sweep(family, {0.5, 1.0}, schedule(2), few);
    FAIL("expected SweepNonConvergence");
  } catch (const SweepNonConvergence& e) {
    CHECK((e.failed_s() == 0.5 || e.failed_s() == 1.0));
    CHECK(e.partial().solutions.size() < 2);
  }
}

TEST_CASE("perturbation study: unchanged level set stays at solver noise") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 0.6, enforce_zero_extension(constant(m, 2.0), *m), 1.0, 1.0, zero);
  const auto rep = v_perturbation_study(data, {zero, zero, zero}, schedule(), tight());
  for (double e : rep.grad_errors) CHECK(e <= rep.noise_floor);
  for (double d : rep.level_set_distances) CHECK(d == 0.0);
}

TEST_CASE("perturbation study: shrinking bumps and oscillating modes") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 0.6, enforce_zero_extension(constant(m, 2.0), *m), 1.0, 1.0, zero);
  const auto bump = enforce_zero_extension(smooth_bump(m->grid_ptr(), {0.0, 0.0}, 0.3), *m);
  const auto mode = on_omega(m, [](double x) { return std::sin(3.0 * std::numbers::pi * x); });
  GridFunction oscillating = bump;
  for (std::size_t i = 0; i < oscillating.size(); ++i) oscillating[i] *= mode[i];

  for (const GridFunction* shape : std::vector<const GridFunction*>{&bump, &oscillating}) {
    std::vector<GridFunction> v_list;
    for (int n = 1; n <= 6; ++n) {
      GridFunction v = *shape;
      v *= 2.0 / n;
      v_list.push_back(v);
    }
    const auto rep = v_perturbation_study(data, v_list, schedule(), tight());
    REQUIRE(rep.grad_errors.size() == v_list.size());
    CHECK(rep.grad_errors.front() > rep.noise_floor);
    CHECK(decreasing_beyond_noise(rep.grad_errors, rep.noise_floor));
    CHECK(rep.grad_errors.back() <= rep.noise_floor);
    for (std::size_t k = 1; k < rep.level_set_distances.size(); ++k)
      CHECK(rep.level_set_distances[k] < rep.level_set_distances[k - 1]);
    CHECK(rep.pairing_gaps.back() <= 1e-6);
  }
}

TEST_CASE("decreasing beyond noise") {
  CHECK(decreasing_beyond_noise({3.0, 2.0, 1.0}, 0.1));
  CHECK_FALSE(decreasing_beyond_noise({3.0, 2.0, 2.5}, 0.1));
  CHECK(decreasing_beyond_noise({3.0, 0.05, 0.08}, 0.1));
  CHECK_FALSE(decreasing_beyond_noise({3.0, 0.05, 0.2}, 0.1));
}

TEST_CASE("characteristic convergence examples") {
  const auto m = interval_mask(-1, 1, 256);
  const auto v = enforce_zero_extension(constant(m, 0.0), *m);
  const auto u = on_omega(m, [](double x) { return x; });
  const auto limit = fake_solution(u, v, 1e-4);
  CHECK(characteristic_convergence_check({limit}, limit, *m, 2.0).front() == 0.0);

  GridFunction moved = u;
  std::size_t flip = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (m->inside(i) && u[i] > 0.5) {
      flip = i;
      break;
    }
  moved[flip] = -1.0;
  const double h = m->grid().cell_volume();
  for (double r : {1.0, 2.0, 3.0})
    CHECK(characteristic_convergence_check({fake_solution(moved, v, 1e-4)}, limit, *m, r).front() ==
          doctest::Approx(std::pow(h, 1.0 / r)));

  const auto flat = fake_solution(v, v, 1e-4);
  CHECK_THROWS_AS(characteristic_convergence_check({limit}, flat, *m, 2.0), UnsupportedRegime);
  CHECK_THROWS_AS(characteristic_convergence_check({limit}, limit, *m, 0.5), InvalidArgument);
}
