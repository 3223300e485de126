#include "gradshare/util/stats.hpp"

#include <cmath>

namespace gradshare::util {

MeanWithInterval mean_ci95(std::span<const double> values) {
  MeanWithInterval r;
  r.count = values.size();
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  r.half_width = 1.96 * r.sd / std::sqrt(static_cast<double>(values.size()));
  return r;
}

}  // namespace gradshare::util
