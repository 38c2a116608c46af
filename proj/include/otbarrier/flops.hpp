#pragma once

namespace otb {

/// Analytic operation tally; kernels add their textbook counts.
struct FlopCounter {
  double total = 0.0;
  void add(double flops) { total += flops; }
};

inline void count(FlopCounter* counter, double flops) {
  if (counter) counter->add(flops);
}

}  // namespace otb
