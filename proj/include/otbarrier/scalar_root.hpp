#pragma once

// Root of f(x) = Σᵢ 1/(x + aᵢ) = a on (−min aᵢ, ∞).
//
// f is positive, strictly decreasing and strictly convex there, so Newton
// started left of the root climbs monotonically and the secant through a
// bracket overestimates it. solve() bisects until the bracket is short, then
// alternates a Newton step on the lower end with a regula falsi step on the
// upper end.

#include <cstddef>
#include <span>
#include <vector>

namespace otb {

/// Shifts sorted descending; back() is the smallest.
class ShiftSpectrum {
 public:
  explicit ShiftSpectrum(std::vector<double> shifts);
  std::span<const double> shifts() const { return a_; }
  std::size_t size() const { return a_.size(); }
  double smallest() const { return a_.back(); }
  double largest() const { return a_.front(); }

 private:
  std::vector<double> a_;
};

struct ShiftSums {
  double f;
  double df;
  double d2f;
};

ShiftSums f_and_derivs(double x, const ShiftSpectrum& s);

struct Bracket {
  double lo;
  double hi;
};

/// [1/a − a_min, n/a − a_min]; always contains the root.
Bracket bracket(double target, const ShiftSpectrum& s);

/// ⌈log₂(n(n−1)·target/tol)⌉, clamped at zero.
std::size_t bisection_budget(std::size_t n, double target, double tol);

struct RootResult {
  double x = 0.0;
  double f_at_x = 0.0;
  std::size_t iterations_bisect = 0;
  std::size_t iterations_newton = 0;
  Bracket bracket_final{0.0, 0.0};
};

/// Iterates recorded by solve() when a trace is supplied.
struct RootTrace {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> newton;
};

RootResult solve(double target, const ShiftSpectrum& s, double tol, RootTrace* trace = nullptr);

}  // namespace otb
