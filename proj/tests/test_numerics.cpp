#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oppsched/linalg.hpp"
#include "oppsched/quadrature.hpp"
#include "oppsched/rng.hpp"

using namespace oppsched;

TEST_CASE("gk15 rule integrates polynomials exactly") {
  auto r = integrate([](double x) { return std::pow(x, 10.0); }, 0.0, 1.0, 1e-12);
  REQUIRE(r.converged);
  REQUIRE(r.value == Catch::Approx(1.0 / 11.0).margin(1e-14));
}

TEST_CASE("adaptive quadrature reaches tolerance on smooth integrands") {
  auto sine = integrate([](double x) { return std::sin(x); }, 0.0,
                        std::numbers::pi, 1e-12);
  REQUIRE(sine.converged);
  REQUIRE(sine.value == Catch::Approx(2.0).margin(1e-12));

  auto expo = integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
  REQUIRE(expo.value == Catch::Approx(std::exp(1.0) - 1.0).margin(1e-12));

  auto decade = integrate([](double x) { return 1.0 / (x * x); }, 1.0, 1e4, 1e-10);
  REQUIRE(decade.converged);
  REQUIRE(decade.value == Catch::Approx(1.0 - 1e-4).margin(1e-9));
}

TEST_CASE("segmented quadrature splits at known kinks") {
  auto r = integrate_segmented([](double x) { return std::abs(x - 1.0); }, 0.0,
                               2.0, {1.0}, 1e-13);
  REQUIRE(r.converged);
  REQUIRE(r.value == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("quadrature flags non-convergence on a divergent integrand") {
  auto r = integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-9, 200);
  REQUIRE_FALSE(r.converged);
}

TEST_CASE("dense solver handles pivoting and flags singular systems") {
  // rows need swapping before elimination
  auto x = solve_linear({0.0, 1.0, 1.0, 0.0}, {2.0, 3.0});
  REQUIRE(x);
  REQUIRE((*x)[0] == Catch::Approx(3.0));
  REQUIRE((*x)[1] == Catch::Approx(2.0));

  auto y = solve_linear({1.0, 2.0, 2.0, 4.0}, {1.0, 2.0});
  REQUIRE_FALSE(y);

  auto z = solve_linear({2, 1, -1, -3, -1, 2, -2, 1, 2}, {8, -11, -3});
  REQUIRE(z);
  REQUIRE((*z)[0] == Catch::Approx(2.0).margin(1e-12));
  REQUIRE((*z)[1] == Catch::Approx(3.0).margin(1e-12));
  REQUIRE((*z)[2] == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("rng streams are reproducible and splittable") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng c(42);
  Rng child1 = c.split(7), child2 = c.split(7), other = c.split(8);
  REQUIRE(child1.next_u64() == child2.next_u64());
  REQUIRE(child1.next_u64() != other.next_u64());
}

TEST_CASE("uniform01 stays in range with the right mean") {
  Rng rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // 3 sigma of the mean of U(0,1)
  REQUIRE(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}
