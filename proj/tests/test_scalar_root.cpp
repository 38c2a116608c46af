#include "support.hpp"

#include "otbarrier/errors.hpp"
#include "otbarrier/scalar_root.hpp"

#include <doctest.h>

using namespace otb;
using namespace otb::testing;

namespace {

double f_direct(double x, const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += 1.0 / (x + v);
  return s;
}

double oracle_root(double target, const std::vector<double>& a) {
  const double amin = *std::min_element(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  return bisect_root([&](double x) { return f_direct(x, a) - target; }, 1.0 / target - amin, n / target - amin,
                     1e-16);
}

}  // namespace

TEST_CASE("f and its derivatives") {
  const ShiftSums one = f_and_derivs(0.0, ShiftSpectrum({2.0}));
  CHECK(one.f == 0.5);
  CHECK(one.df == -0.25);
  CHECK(one.d2f == 0.25);

  const ShiftSums eq = f_and_derivs(2.0, ShiftSpectrum({1.0, 1.0, 1.0}));
  CHECK(eq.f == doctest::Approx(1.0));
  CHECK(eq.df == doctest::Approx(-1.0 / 3.0));
  CHECK(eq.d2f == doctest::Approx(2.0 / 9.0));

  CHECK_THROWS_AS(f_and_derivs(-1.0, ShiftSpectrum({1.0, 3.0})), InvalidArgument);
}

TEST_CASE("derivatives match central differences") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_vector(rng, 6, -2.0, 3.0);
    const ShiftSpectrum s(a);
    const double x = -s.smallest() + rng.uniform(0.2, 2.0);
    const double h = 1e-5;
    const double fd1 = (f_direct(x + h, a) - f_direct(x - h, a)) / (2 * h);
    const ShiftSums r = f_and_derivs(x, s);
    const double fd2 = (f_and_derivs(x + h, s).df - f_and_derivs(x - h, s).df) / (2 * h);
    CHECK(std::abs(fd1 - r.df) <= 1e-6 * std::abs(r.df));
    CHECK(std::abs(fd2 - r.d2f) <= 1e-6 * std::abs(r.d2f));
    CHECK(r.f > 0.0);
    CHECK(r.df < 0.0);
    CHECK(r.d2f > 0.0);
  }
}

TEST_CASE("shift spectrum is sorted descending") {
  const ShiftSpectrum s({0.5, 3.2, 1.7});
  CHECK(s.largest() == 3.2);
  CHECK(s.smallest() == 0.5);
  CHECK(s.shifts()[1] == 1.7);
  CHECK_THROWS_AS(ShiftSpectrum({}), InvalidArgument);
}

TEST_CASE("bracket endpoints") {
  const std::vector<double> a{3.0, 2.0, 1.0};
  const Bracket b = bracket(1.0, ShiftSpectrum(a));
  CHECK(b.lo == 0.0);
  CHECK(b.hi == 2.0);
  CHECK(f_direct(b.lo, a) > 1.0);
  CHECK(f_direct(b.hi, a) < 1.0);

  const Bracket single = bracket(0.5, ShiftSpectrum({2.0}));
  CHECK(single.lo == 0.0);
  CHECK(single.hi == 0.0);

  Rng rng(2);
  const auto r = random_vector(rng, 7, 0.0, 4.0);
  const Bracket br = bracket(2.0, ShiftSpectrum(r));
  const double root = oracle_root(2.0, r);
  CHECK(br.lo <= root);
  CHECK(root <= br.hi);

  CHECK_THROWS_AS(bracket(0.0, ShiftSpectrum(a)), InvalidArgument);
}

TEST_CASE("bisection budget uses log base 2") {
  CHECK(bisection_budget(3, 1.0, 0.75) == 3);  // log2(8) = 3
  CHECK(bisection_budget(1, 1.0, 1e-10) == 0);
  CHECK(bisection_budget(2, 1.0, 4.0) == 0);
}

TEST_CASE("closed forms") {
  const RootResult one = solve(0.5, ShiftSpectrum({2.0}), 1e-12);
  CHECK(one.x == doctest::Approx(0.0));
  const RootResult eq = solve(1.0, ShiftSpectrum({1.0, 1.0, 1.0}), 1e-12);
  CHECK(eq.x == doctest::Approx(2.0));
}

TEST_CASE("matches the bisection oracle") {
  const std::vector<double> a{3.2, 1.7, 0.5};
  const double tol = 1e-12;
  const RootResult r = solve(2.0, ShiftSpectrum(a), tol);
  CHECK(std::abs(f_direct(r.x, a) - 2.0) <= tol);
  CHECK(std::abs(r.x - oracle_root(2.0, a)) <= 1e-10);
  CHECK(r.x > -0.5);
  CHECK(r.bracket_final.lo <= r.x);
  CHECK(r.x <= r.bracket_final.hi);
}

TEST_CASE("iterates are monotone and the root stays bracketed") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 30);
    const auto a = random_vector(rng, n, -5.0, 5.0);
    const double target = rng.uniform(0.01, 50.0);
    const double root = oracle_root(target, a);
    RootTrace trace;
    const RootResult r = solve(target, ShiftSpectrum(a), 1e-10, &trace);
    CHECK(std::abs(r.f_at_x - target) <= 1e-10);
    for (std::size_t k = 1; k < trace.lower.size(); ++k) CHECK(trace.lower[k] >= trace.lower[k - 1]);
    for (std::size_t k = 1; k < trace.upper.size(); ++k) CHECK(trace.upper[k] <= trace.upper[k - 1]);
    for (std::size_t k = 1; k < trace.newton.size(); ++k) CHECK(trace.newton[k] >= trace.newton[k - 1]);
    for (double lo : trace.lower) CHECK(lo <= root + 1e-12 * (1.0 + std::abs(root)));
    for (double hi : trace.upper) CHECK(hi >= root - 1e-12 * (1.0 + std::abs(root)));
  }
}

TEST_CASE("solve is deterministic") {
  const std::vector<double> a{0.3, -0.2, 1.9, 4.4};
  const RootResult r1 = solve(3.0, ShiftSpectrum(a), 1e-11);
  const RootResult r2 = solve(3.0, ShiftSpectrum(a), 1e-11);
  CHECK(r1.x == r2.x);
  CHECK(r1.iterations_newton == r2.iterations_newton);
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(solve(-1.0, ShiftSpectrum({1.0}), 1e-10), InvalidArgument);
  CHECK_THROWS_AS(solve(1.0, ShiftSpectrum({1.0}), 0.0), InvalidArgument);
}
