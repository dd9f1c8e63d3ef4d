#pragma once

#include <vector>

namespace wxscale {

/// Order-independent floating-point sum.
///
/// Keeps the running total as a list of non-overlapping partials (Shewchuk's
/// expansion arithmetic), so `value()` is the correctly rounded sum of every
/// value added, whatever the order. Two accumulators merge exactly.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  double value() const;

 private:
  std::vector<double> partials_;
};

}  // namespace wxscale
