#pragma once

#include <cmath>
#include <span>

namespace qsynth {

struct MeanCi {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double sem = 0.0;
  int count = 0;
  bool degenerate = false;  // fewer than two samples
};

// 95% normal-approximation interval: mean +- 1.96 * sem.
inline MeanCi normal_ci95(std::span<const double> xs) {
  MeanCi out;
  out.count = static_cast<int>(xs.size());
  if (xs.empty()) {
    out.degenerate = true;
    return out;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) {
    out.ci_low = out.ci_high = out.mean;
    out.degenerate = true;
    return out;
  }
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  var /= static_cast<double>(xs.size() - 1);
  out.sem = std::sqrt(var / static_cast<double>(xs.size()));
  out.ci_low = out.mean - 1.96 * out.sem;
  out.ci_high = out.mean + 1.96 * out.sem;
  return out;
}

}  // namespace qsynth
