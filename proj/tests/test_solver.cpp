#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include "support.hpp"

using namespace testing;

namespace {

SolverConfig tight(double tol = 1e-10) {
  SolverConfig c;
  c.grad_tol = tol;
  return c;
}

RegularizationParams short_schedule(int steps = 8) {
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

double rel_l2(const GridFunction& a, const GridFunction& b, const OmegaMask& m) {
  return lp_norm(a - b, 2.0, m) / lp_norm(b, 2.0, m);
}

// Index of the node mirrored through the centre of a symmetric 1D box.
std::size_t mirror(std::size_t i, std::size_t n) { return n - 1 - i; }

}  // namespace

TEST_CASE("zero data gives the zero solution") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 3.0, 0.4, zero, 0.0, 0.0, zero);
  for (double eps : {1.0, 1e-3}) CHECK(max_abs(solve_regularized(data, eps, tight())) == 0.0);
}

TEST_CASE("p = 2, lambda = 0 matches the masked multiplier matrix solved by conjugate gradients") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto f = enforce_zero_extension(constant(m, 1.0), *m);
  const double s = 0.5;
  const auto data = ProblemData(m, 2.0, s, f, zero, zero, zero);
  const auto u = solve_regularized(data, 1.0, tight(1e-11));

  // Columns of |2 pi xi|^(2s) by naive DFT, restricted to Omega.
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (m->inside(i)) idx.push_back(i);
  const std::size_t n = idx.size();
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd b(n);
  for (std::size_t c = 0; c < n; ++c) {
    GridFunction e(m->grid_ptr());
    e[idx[c]] = 1.0;
    const auto col = naive_fractional_laplacian(e, s);
    for (std::size_t a = 0; a < n; ++a) A(a, c) = col[idx[a]];
    b(c) = f[idx[c]];
  }
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * A.cwiseAbs().maxCoeff());
  Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-13);
  cg.compute(A);
  const Eigen::VectorXd x = cg.solve(b);
  REQUIRE(cg.info() == Eigen::Success);
  GridFunction oracle(m->grid_ptr());
  for (std::size_t a = 0; a < n; ++a) oracle[idx[a]] = x(a);
  CHECK(rel_l2(u, oracle, *m) <= 2e-2);
  CHECK(rel_l2(u, oracle, *m) <= 1e-8);
}

TEST_CASE("p = 2, s = 1/2, f = 1 on (-1, 1) approaches sqrt(1 - x^2)") {
  // Wide padding: the periodic images of the slowly decaying flux are what limit accuracy here.
  const auto m = interval_mask(-1, 1, 2048, 8.0);
  const auto zero = constant(m, 0.0);
  const auto data = ProblemData(m, 2.0, 0.5, enforce_zero_extension(constant(m, 1.0), *m), zero, zero, zero);
  const auto u = solve_regularized(data, 1.0, tight());
  const auto exact = on_omega(m, [](double x) { return std::sqrt(std::max(0.0, 1.0 - x * x)); });
  CHECK(rel_l2(u, exact, *m) <= 2e-2);
}

TEST_CASE("large level set leaves only the lambda_minus branch active") {
  const auto m = interval_mask(-1, 1, 512);
  const auto f = enforce_zero_extension(constant(m, 1.0), *m);
  const auto v = enforce_zero_extension(constant(m, 100.0), *m);
  const auto with = problem(m, 2.0, 0.6, f, 5.0, 0.5, v);
  const auto without = problem(m, 2.0, 0.6, f, 0.0, 0.5, v);
  const auto a = solve_two_phase(with, short_schedule(), tight());
  const auto b = solve_two_phase(without, short_schedule(), tight());
  CHECK(max_abs_diff(a.u, b.u) <= 1e-8);
  CHECK(max_abs(a.chi_gt) == 0.0);
}

TEST_CASE("vanishing multipliers reduce to the unconstrained minimiser") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const auto f = enforce_zero_extension(random_field(m->grid_ptr(), 2), *m);
  const auto v = enforce_zero_extension(random_field(m->grid_ptr(), 3), *m);
  for (double p : {2.0, 3.0}) {
    const auto data = problem(m, p, 0.7, f, 0.0, 0.0, v);
    const auto sol = solve_two_phase(data, short_schedule(), tight());
    const auto free_u = solve_regularized(data, 1.0, tight());
    CHECK(max_abs_diff(sol.u, free_u) <= 1e-6 * (1.0 + max_abs(free_u)));
    CHECK(max_abs(sol.zeta) == 0.0);
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
      CHECK(sol.chi_gt[i] >= 0.0);
      CHECK(sol.chi_lt[i] >= 0.0);
      CHECK(sol.chi_gt[i] + sol.chi_lt[i] <= 1.0);
    }
  }
}

TEST_CASE("large positive load with s = 1 gives a positive solution") {
  const auto m = interval_mask(-1, 1, 1024);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 1.0, enforce_zero_extension(constant(m, 3.0), *m), 1.0, 1.0, zero);
  const auto sol = solve_two_phase(data, short_schedule(), tight());
  const double eps = sol.diagnostics.final_eps;
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    if (!m->inside(i)) continue;
    CHECK(sol.u[i] > 0.0);
    if (sol.u[i] >= eps) CHECK(sol.chi_gt[i] == 1.0);
    CHECK(sol.chi_lt[i] == 0.0);
  }
  // Interior solution of u'' = -(f - lambda_+) = -2 with zero boundary values.
  const auto exact = on_omega(m, [](double x) { return 1.0 - x * x; });
  CHECK(rel_l2(sol.u, exact, *m) <= 1.5e-2);
}

TEST_CASE("odd data gives an odd solution with mirrored phases") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const auto f = on_omega(m, [](double x) { return 3.0 * std::sin(std::numbers::pi * x); });
  const auto data = problem(m, 2.5, 0.6, f, 1.0, 1.0, zero);
  const auto sol = solve_two_phase(data, short_schedule(), tight());
  const std::size_t n = sol.u.size();
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(sol.u[i] + sol.u[mirror(i, n)]) <= 1e-6);
    CHECK(std::abs(sol.chi_gt[i] - sol.chi_lt[mirror(i, n)]) <= 1e-6 / sol.diagnostics.final_eps);
  }
}

TEST_CASE("solution triple: sandwich, zeta identity, weak form, variational inequality") {
  const auto m = interval_mask(-1, 1, 512);
  const auto f = on_omega(m, [](double x) { return 3.0 * x + 0.5; });
  const auto v = on_omega(m, [](double x) { return 0.1 * std::cos(x); });
  const auto lp = enforce_zero_extension(constant(m, 1.0), *m);
  const auto lm = on_omega(m, [](double x) { return 0.5 + 0.5 * x * x; });
  for (double p : {2.0, 3.0}) {
    const ProblemData data(m, p, 0.6, f, lp, lm, v);
    const auto sol = solve_two_phase(data, short_schedule(), tight());
    const double eps = sol.diagnostics.final_eps;
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
      if (!m->inside(i)) {
        CHECK(sol.u[i] == 0.0);
        continue;
      }
      const double t = sol.u[i] - v[i];
      CHECK(sol.zeta[i] == doctest::Approx(lp[i] * sol.chi_gt[i] - lm[i] * sol.chi_lt[i]).epsilon(1e-14));
      CHECK(sol.chi_gt[i] >= 0.0);
      CHECK(sol.chi_gt[i] <= 1.0);
      CHECK(sol.chi_lt[i] >= 0.0);
      CHECK(sol.chi_lt[i] <= 1.0);
      if (t >= eps) CHECK(sol.chi_gt[i] == 1.0);
      if (t <= -eps) CHECK(sol.chi_lt[i] == 1.0);
      if (t < 0.0) CHECK(sol.chi_gt[i] == 0.0);
      if (t > 0.0) CHECK(sol.chi_lt[i] == 0.0);
    }
    CHECK(sol.diagnostics.residual <= sol.diagnostics.residual_threshold);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto w = random_test_function(*m, 100 + seed);
      CHECK(std::abs(weak_form_residual(sol, data, w)) <=
            sol.diagnostics.residual_threshold * lp_norm(w, 2.0) * (1.0 + 1e-8) + 1e-13);
      CHECK(variational_inequality_defect(sol, data, w) >= -variational_inequality_tolerance(sol, data, w));
      GridFunction near = sol.u;
      near.axpy(1e-3, w);
      CHECK(variational_inequality_defect(sol, data, near) >= -variational_inequality_tolerance(sol, data, near));
    }
  }
}

TEST_CASE("rate study with vanishing multipliers flags inactive regularization") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 0.5, enforce_zero_extension(constant(m, 1.0), *m), 0.0, 0.0, zero);
  const auto report = epsilon_rate_study(data, {0.4, 0.2, 0.1, 0.05}, tight());
  CHECK(report.regularization_inactive);
  CHECK(std::isnan(report.fitted_slope));
  CHECK(report.reference_eps == doctest::Approx(0.05 / 8));
  for (double e : report.errors) CHECK(e <= report.noise_floor);
  CHECK_THROWS_AS(epsilon_rate_study(data, {0.4, 0.2, 0.1}, tight()), InvalidArgument);
  CHECK_THROWS_AS(epsilon_rate_study(data, {0.4, 0.2, 0.3, 0.1}, tight()), InvalidArgument);
}

TEST_CASE("rate study without resolvable errors is a degenerate fit") {
  // f strictly between -lambda_- and lambda_+ with v = 0: u_eps vanishes for every eps.
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 0.5, zero, 1.0, 1.0, zero);
  CHECK_THROWS_AS(epsilon_rate_study(data, {0.4, 0.2, 0.1, 0.05}, tight()), DegenerateFit);
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({1.0, 2.0, 4.0}, {3.0, 3.0 * std::sqrt(2.0), 6.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), DegenerateFit);
  CHECK_THROWS_AS(loglog_slope({1.0, 1.0}, {1.0, 2.0}), DegenerateFit);
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {0.0, 2.0}), DegenerateFit);
}

TEST_CASE("two membranes: zero data, decoupling, reflection symmetry") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const auto reg = short_schedule();

  const auto zero_data = problem(m, 2.0, 0.6, zero, 1.0, 1.0, zero);
  const auto z = solve_two_membrane(zero_data, zero, reg, tight());
  CHECK(max_abs(z.u) == 0.0);
  CHECK(max_abs(z.w) == 0.0);

  const auto f = on_omega(m, [](double x) { return 2.0 + x; });
  const auto g = on_omega(m, [](double x) { return std::cos(3.0 * x); });
  const auto free = problem(m, 3.0, 0.6, f, 0.0, 0.0, zero);
  const auto d = solve_two_membrane(free, g, reg, tight());
  const auto u_alone = solve_regularized(free, 1.0, tight());
  const auto w_alone = solve_regularized(free.with_f(g), 1.0, tight());
  CHECK(max_abs_diff(d.u, u_alone) <= 1e-6 * max_abs(u_alone));
  CHECK(max_abs_diff(d.w, w_alone) <= 1e-6 * max_abs(w_alone));

  const auto step = on_omega(m, [](double x) { return x > 0 ? 3.0 : -3.0; });
  GridFunction minus = step;
  minus *= -1.0;
  for (auto [lp, lm] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
    const auto data = problem(m, 2.0, 0.6, step, lp, lm, zero);
    const auto sol = solve_two_membrane(data, minus, reg, tight());
    GridFunction sum = sol.u;
    sum += sol.w;
    CHECK(max_abs(sum) <= 1e-6);
    for (std::size_t i = 0; i < sol.u.size(); ++i)
      CHECK(sol.zeta[i] == doctest::Approx(lp * sol.chi_gt[i] - lm * sol.chi_lt[i]).epsilon(1e-14));
    // Minimal energies grow as eps shrinks, since G_eps increases pointwise.
    for (std::size_t k = 1; k < sol.energy_trace.size(); ++k)
      CHECK(sol.energy_trace[k] >= sol.energy_trace[k - 1] - 1e-9 * (1.0 + std::abs(sol.energy_trace[k - 1])));
  }
}

TEST_CASE("interphase measure examples") {
  const auto m = interval_mask(0, 1, 1024);
  const auto v = enforce_zero_extension(random_field(m->grid_ptr(), 9), *m);
  GridFunction above = v;
  for (std::size_t i = 0; i < above.size(); ++i) above[i] += 1.0;
  CHECK(measure_interphase(above, v, 0.5, *m) == 0.0);
  CHECK(measure_interphase(v, v, 0.5, *m) == doctest::Approx(m->measure()));
  const double slope = 2.0, delta = 0.1, h = m->grid().spacing(0);
  GridFunction lin = v;
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] += slope * (m->grid().point(i)[0] - 0.5);
  CHECK(std::abs(measure_interphase(lin, v, delta, *m) - 2.0 * delta / slope) <= h);
  CHECK_THROWS_AS(measure_interphase(v, v, 0.0, *m), InvalidArgument);
}

TEST_CASE("nondegeneracy examples") {
  const auto m = interval_mask(-1, 1, 256);
  const auto zero = constant(m, 0.0);
  const auto a = ProblemData(m, 2.0, 0.5, constant(m, 2.0), constant(m, 1.0), zero, zero);
  const auto ok = check_nondegeneracy(a);
  CHECK(ok.global);
  CHECK(std::all_of(ok.nodewise.begin(), ok.nodewise.end(), [](auto b) { return b == 1; }));
  const auto b = problem(m, 2.0, 0.5, zero, 1.0, 1.0, zero);
  const auto bad = check_nondegeneracy(b);
  CHECK_FALSE(bad.global);
  for (std::size_t i = 0; i < bad.nodewise.size(); ++i) CHECK(bad.nodewise[i] == (m->inside(i) ? 0 : 1));

  const auto f = enforce_zero_extension(3.0 * random_field(m->grid_ptr(), 4), *m);
  const auto lp = enforce_zero_extension(constant(m, 1.0), *m);
  const auto lm = enforce_zero_extension(constant(m, 2.0), *m);
  const auto shift = random_field(m->grid_ptr(), 5);
  const ProblemData mixed(m, 2.0, 0.5, f, lp, lm, zero);
  const auto map = check_nondegeneracy(mixed, shift);
  bool all = true;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!m->inside(i)) continue;
    const double fe = f[i] + shift[i];
    const bool expect = (1.0 < fe) || (fe < -2.0);
    CHECK(map.nodewise[i] == (expect ? 1 : 0));
    all = all && expect;
  }
  CHECK(map.global == all);
}

TEST_CASE("energy decreases along accepted iterations") {
  const auto m = interval_mask(-1, 1, 512);
  const auto f = enforce_zero_extension(random_field(m->grid_ptr(), 11), *m);
  const auto v = enforce_zero_extension(0.2 * random_field(m->grid_ptr(), 12), *m);
  for (double p : {1.6, 2.0, 3.0}) {
    const auto data = problem(m, p, 0.5, f, 1.0, 0.5, v);
    SolveStats st;
    const auto u = solve_regularized(data, 0.05, tight(1e-8), std::nullopt, &st, true);
    REQUIRE(st.energy_trace.size() == st.iterations + 1);
    for (std::size_t k = 1; k < st.energy_trace.size(); ++k)
      CHECK(st.energy_trace[k] <= st.energy_trace[k - 1] + 1e-14 * (1.0 + std::abs(st.energy_trace[k - 1])));
    CHECK(st.residual <= st.threshold);
    CHECK(lp_norm(first_variation(u, data, 0.05), 2.0) == doctest::Approx(st.residual).epsilon(1e-10));
  }
}

TEST_CASE("solves from different starting points agree") {
  const auto m = interval_mask(-1, 1, 512);
  const auto f = on_omega(m, [](double x) { return 3.0 * x; });
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 0.6, f, 1.0, 1.0, zero);
  const auto a = solve_regularized(data, 0.01, tight(1e-11), random_test_function(*m, 1));
  const auto b = solve_regularized(data, 0.01, tight(1e-11), random_test_function(*m, 2));
  CHECK(max_abs_diff(a, b) <= 1e-7);
}

TEST_CASE("solver rejects bad configuration") {
  const auto m = interval_mask(-1, 1, 64);
  const auto zero = constant(m, 0.0);
  const auto data = problem(m, 2.0, 0.5, zero, 0.0, 0.0, zero);
  CHECK_THROWS_AS(solve_regularized(data, 0.0, tight()), InvalidArgument);
  SolverConfig c;
  c.grad_tol = -1.0;
  CHECK_THROWS_AS(solve_regularized(data, 1.0, c), ValidationError);
  const auto f = enforce_zero_extension(constant(m, 1.0), *m);
  SolverConfig few;
  few.max_iters = 2;
  few.grad_tol = 1e-12;
  try {
    solve_two_phase(problem(m, 2.0, 0.5, f, 0.0, 0.0, zero), short_schedule(3), few);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.stage() == 0);
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("a-priori gradient bound holds with a constant fitted once per grid") {
  const auto m = interval_mask(-1, 1, 512);
  const auto zero = constant(m, 0.0);
  const double p = 3.0, s = 0.6;
  const double q = 4.0;
  const auto ex = sobolev_exponents(p, s, 1);
  auto ratio = [&](const GridFunction& f, const GridFunction& lp, const GridFunction& lm) {
    const ProblemData data(m, p, s, f, lp, lm, zero, q);
    const auto u = solve_regularized(data, 0.05, tight(1e-9));
    const double lhs = std::pow(vector_lp_norm(data.plan().gradient(u), p), p - 1.0);
    const double fnorm = ex.p_sharp == 1.0 ? l1_norm(f, *m) : lp_norm(f, ex.p_sharp, *m);
    const double rhs = lp_norm(lp, q, *m) + lp_norm(lm, q, *m) + fnorm;
    return lhs / rhs;
  };
  const auto one = enforce_zero_extension(constant(m, 1.0), *m);
  const double C = ratio(enforce_zero_extension(constant(m, 3.0), *m), one, one);
  REQUIRE(C > 0.0);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto f = enforce_zero_extension((1.0 + seed) * random_field(m->grid_ptr(), 200 + seed), *m);
    GridFunction lp = enforce_zero_extension(random_field(m->grid_ptr(), 300 + seed), *m);
    for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = std::abs(lp[i]);
    CHECK(ratio(f, lp, one) <= C);
  }
}

TEST_CASE("Poincare constant stays below C_P / s") {
  const auto m = interval_mask(-1, 1, 256);
  const std::vector<double> orders{0.3, 0.5, 0.7, 0.9, 1.0};
  for (double p : {2.0, 3.0}) {
    std::vector<double> c;
    double CP = 0.0;
    for (double s : orders) {
      c.push_back(poincare_constant(m, p, s, tight(1e-10)));
      CP = std::max(CP, s * c.back());
    }
    // Log-log growth no faster than 1/s.
    CHECK(loglog_slope(orders, c) >= -1.0);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      const SpectralPlan& plan = *spectral_plan(m->grid_ptr(), FractionalOrder(orders[k]));
      for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto u = random_test_function(*m, 400 + seed);
        CHECK(lp_norm(u, p, *m) <= (CP / orders[k]) * vector_lp_norm(plan.gradient(u), p) * (1.0 + 1e-9));
      }
      const auto b = enforce_zero_extension(smooth_bump(m->grid_ptr(), {0.3, 0.0}, 0.5), *m);
      CHECK(lp_norm(b, p, *m) <= (CP / orders[k]) * vector_lp_norm(plan.gradient(b), p) * (1.0 + 1e-9));
    }
  }
}
