#include "otbarrier/scalar_root.hpp"

#include "otbarrier/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

namespace otb {

ShiftSpectrum::ShiftSpectrum(std::vector<double> shifts) : a_(std::move(shifts)) {
  if (a_.empty()) throw InvalidArgument("shift spectrum must be non-empty");
  for (double v : a_)
    if (!std::isfinite(v)) throw InvalidArgument("shift spectrum entries must be finite");
  std::sort(a_.begin(), a_.end(), std::greater<>());
}

ShiftSums f_and_derivs(double x, const ShiftSpectrum& s) {
  if (!(x > -s.smallest())) throw InvalidArgument("f_and_derivs: x must exceed −min shift");
  ShiftSums out{0.0, 0.0, 0.0};
  for (double a : s.shifts()) {
    const double r = 1.0 / (x + a);
    const double r2 = r * r;
    out.f += r;
    out.df -= r2;
    out.d2f += 2.0 * r2 * r;
  }
  return out;
}

Bracket bracket(double target, const ShiftSpectrum& s) {
  if (!(target > 0.0) || !std::isfinite(target))
    throw InvalidArgument("bracket: target must be positive and finite");
  const double n = static_cast<double>(s.size());
  return {1.0 / target - s.smallest(), n / target - s.smallest()};
}

std::size_t bisection_budget(std::size_t n, double target, double tol) {
  const double arg = static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0) * target / tol;
  if (!(arg > 1.0)) return 0;
  return static_cast<std::size_t>(std::ceil(std::log2(arg)));
}

namespace {

double f_only(double x, const ShiftSpectrum& s) {
  double f = 0.0;
  for (double a : s.shifts()) f += 1.0 / (x + a);
  return f;
}

class Solver {
 public:
  Solver(double target, const ShiftSpectrum& s, double tol, RootTrace* trace)
      : target_(target), s_(s), tol_(tol), trace_(trace) {}

  RootResult run() {
    const Bracket b0 = bracket(target_, s_);
    lo_ = b0.lo;
    hi_ = b0.hi;
    glo_ = f_only(lo_, s_) - target_;
    ghi_ = f_only(hi_, s_) - target_;
    if (trace_) {
      trace_->lower.push_back(lo_);
      trace_->upper.push_back(hi_);
    }
    if (std::abs(glo_) <= tol_) return finish(lo_, glo_);
    if (std::abs(ghi_) <= tol_) return finish(hi_, ghi_);

    const std::size_t budget = bisection_budget(s_.size(), target_, tol_);
    while (hi_ - lo_ > 1.0 && result_.iterations_bisect < budget) {
      if (auto done = bisect()) return *done;
    }

    constexpr std::size_t kMaxNewton = 200;
    while (result_.iterations_newton < kMaxNewton) {
      if (collapsed()) break;
      const double width = hi_ - lo_;
      ++result_.iterations_newton;

      const double df = f_and_derivs(lo_, s_).df;
      const double xn = lo_ - glo_ / df;
      if (trace_) trace_->newton.push_back(xn);
      if (xn > lo_ && xn < hi_) {
        if (auto done = accept(xn)) return *done;
      } else if (auto done = bisect()) {
        return *done;
      }

      if (collapsed()) break;
      const double xs = hi_ - ghi_ * (hi_ - lo_) / (ghi_ - glo_);
      if (xs > lo_ && xs < hi_) {
        if (auto done = accept(xs)) return *done;
      }

      if (hi_ - lo_ > 0.5 * width) {
        if (auto done = bisect()) return *done;
      }
    }
    if (!collapsed()) throw NotConverged("scalar root: Newton phase exhausted its budget");
    return std::abs(glo_) <= std::abs(ghi_) ? finish(lo_, glo_) : finish(hi_, ghi_);
  }

 private:
  using Maybe = std::optional<RootResult>;

  bool collapsed() const {
    const double scale = std::max(std::abs(lo_), std::abs(hi_));
    return hi_ - lo_ <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
  }

  Maybe bisect() {
    ++result_.iterations_bisect;
    return accept(0.5 * (lo_ + hi_));
  }

  // Evaluates g at an interior point and shrinks the bracket around the root.
  Maybe accept(double x) {
    const double g = f_only(x, s_) - target_;
    if (std::abs(g) <= tol_) return finish(x, g);
    if (g > 0.0) {
      check(x >= lo_, "scalar root: lower iterate decreased");
      lo_ = x;
      glo_ = g;
      if (trace_) trace_->lower.push_back(x);
    } else {
      check(x <= hi_, "scalar root: upper iterate increased");
      hi_ = x;
      ghi_ = g;
      if (trace_) trace_->upper.push_back(x);
    }
    const double n = static_cast<double>(s_.size());
    const double spread = glo_ - ghi_;
    const double bound = n * target_ * target_ * (hi_ - lo_);
    check(spread <= bound * (1.0 + 1e-9) + 1e-12 * target_,
          "scalar root: bracket value spread exceeds its Lipschitz bound");
    return std::nullopt;
  }

  RootResult finish(double x, double g) {
    result_.x = x;
    result_.f_at_x = g + target_;
    result_.bracket_final = {lo_, hi_};
    return result_;
  }

  double target_;
  const ShiftSpectrum& s_;
  double tol_;
  RootTrace* trace_;
  RootResult result_;
  double lo_ = 0.0, hi_ = 0.0, glo_ = 0.0, ghi_ = 0.0;
};

}  // namespace

RootResult solve(double target, const ShiftSpectrum& s, double tol, RootTrace* trace) {
  if (!(target > 0.0) || !std::isfinite(target))
    throw InvalidArgument("scalar root: target must be positive and finite");
  if (!(tol > 0.0)) throw InvalidArgument("scalar root: tolerance must be positive");

  if (s.largest() == s.smallest()) {
    RootResult r;
    const double n = static_cast<double>(s.size());
    r.x = n / target - s.largest();
    r.f_at_x = f_only(r.x, s);
    r.bracket_final = {r.x, r.x};
    if (trace) {
      trace->lower.push_back(r.x);
      trace->upper.push_back(r.x);
    }
    return r;
  }
  return Solver(target, s, tol, trace).run();
}

}  // namespace otb
