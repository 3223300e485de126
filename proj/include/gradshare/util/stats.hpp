#pragma once

#include <span>

namespace gradshare::util {

struct MeanWithInterval {
  double mean = 0.0;
  double sd = 0.0;         // sample standard deviation (n - 1)
  double half_width = 0.0; // 1.96 * sd / sqrt(n)
  std::size_t count = 0;
};

/// Mean and normal-approximation 95% confidence half-width.
MeanWithInterval mean_ci95(std::span<const double> values);

}  // namespace gradshare::util
