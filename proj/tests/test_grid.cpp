#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace testing;

TEST_CASE("grid rejects node counts that are not powers of two") {
  CHECK_THROWS_AS(BoxGrid(1, {0, 0}, {1, 1}, {12, 1}), InvalidArgument);
  CHECK_THROWS_AS(BoxGrid(1, {0, 0}, {1, 1}, {4, 1}), InvalidArgument);
  CHECK_NOTHROW(BoxGrid(1, {0, 0}, {1, 1}, {16, 1}));
  CHECK_THROWS_AS(BoxGrid(3, {0, 0}, {1, 1}, {16, 16}), InvalidArgument);
}

TEST_CASE("padded grid is a square box of side padding * diam centred on Omega") {
  const auto shape = OmegaShape::box({0.0, 0.0}, {3.0, 4.0});
  const auto g = make_padded_grid(shape, 64, 4.0);
  CHECK(g->length(0) == doctest::Approx(20.0));
  CHECK(g->length(1) == doctest::Approx(20.0));
  CHECK(0.5 * (g->lower(0) + g->upper(0)) == doctest::Approx(1.5));
  CHECK(0.5 * (g->lower(1) + g->upper(1)) == doctest::Approx(2.0));
}

TEST_CASE("mask is node-centre membership and checks clearance") {
  const auto m = interval_mask(-1, 1, 64);
  std::size_t count = 0;
  for (std::size_t i = 0; i < m->grid().size(); ++i) {
    const double x = m->grid().coord(0, i);
    CHECK(m->inside(i) == (x > -1.0 && x < 1.0));
    count += m->inside(i);
  }
  CHECK(count == m->count());
  CHECK(m->measure() == doctest::Approx(2.0));
  const auto far = OmegaShape::interval(10.0, 12.0);
  CHECK_THROWS_AS(OmegaMask(make_padded_grid(OmegaShape::interval(-1, 1), 64), far), DomainError);
}

TEST_CASE("lp_norm of a constant on Omega = (0, 2)") {
  const auto m = interval_mask(0, 2, 256);
  const GridFunction one(m->grid_ptr(), 1.0);
  CHECK(lp_norm(one, 2.0, *m) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(lp_norm(GridFunction(m->grid_ptr()), 3.0, *m) == 0.0);
  CHECK_THROWS_AS(lp_norm(one, 1.0, *m), InvalidArgument);
}

TEST_CASE("lp_norm of u(x) = x on (0, 1) matches the closed-form integral") {
  const auto m = interval_mask(0, 1, 4096);
  const auto u = sample(m->grid_ptr(), [](std::array<double, 2> x) { return x[0]; });
  CHECK(std::abs(lp_norm(u, 2.0, *m) - 1.0 / std::sqrt(3.0)) < 1e-3);
}

TEST_CASE("vector_lp_norm examples") {
  const auto g = std::make_shared<const BoxGrid>(2, std::array<double, 2>{0, 0}, std::array<double, 2>{2, 2},
                                                 std::array<std::size_t, 2>{16, 16});
  VectorField F(g, 2);
  for (std::size_t i = 0; i < g->size(); ++i) F[0][i] = 1.0;
  CHECK(vector_lp_norm(F, 2.0) == doctest::Approx(2.0));
  CHECK(vector_lp_norm(VectorField(g, 2), 2.0) == 0.0);

  const auto unit = std::make_shared<const BoxGrid>(2, std::array<double, 2>{0, 0}, std::array<double, 2>{1, 1},
                                                    std::array<std::size_t, 2>{256, 256});
  VectorField G(unit, 2);
  for (std::size_t i = 0; i < unit->size(); ++i) {
    const auto x = unit->point(i);
    G[0][i] = x[0];
    G[1][i] = x[0];
  }
  CHECK(std::abs(vector_lp_norm(G, 2.0) - std::sqrt(2.0 / 3.0)) < 1e-3);
}

TEST_CASE("enforce_zero_extension") {
  const auto m = interval_mask(-1, 1, 64);
  const GridFunction one(m->grid_ptr(), 1.0);
  const auto ind = enforce_zero_extension(one, *m);
  CHECK(ind.zero_outside_omega());
  for (std::size_t i = 0; i < ind.size(); ++i) CHECK(ind[i] == (m->inside(i) ? 1.0 : 0.0));
  const auto u = random_field(m->grid_ptr(), 3);
  const auto once = enforce_zero_extension(u, *m);
  const auto twice = enforce_zero_extension(once, *m);
  CHECK(max_abs_diff(once, twice) == 0.0);
  CHECK(lp_norm(once, 2.0) <= lp_norm(u, 2.0));
  const auto other = interval_mask(-1, 1, 128);
  CHECK_THROWS_AS(enforce_zero_extension(u, *other), DomainError);
}

TEST_CASE("lp_norm is homogeneous and satisfies the triangle inequality") {
  const auto m = box_mask({-1, -1}, {1, 1}, 32);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto u = random_field(m->grid_ptr(), seed);
    const auto w = random_field(m->grid_ptr(), seed + 100);
    for (double p : {1.5, 2.0, 3.0}) {
      for (double c : {-2.5, 0.0, 0.3, 7.0}) CHECK(lp_norm(c * u, p) == doctest::Approx(std::abs(c) * lp_norm(u, p)).epsilon(1e-12));
      CHECK(lp_norm(u + w, p) <= (lp_norm(u, p) + lp_norm(w, p)) * (1.0 + 1e-12));
    }
  }
}
