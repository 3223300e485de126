#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "gradshare/harness/metrics.hpp"

namespace gradshare::harness {

struct Peak {
  std::uint32_t epoch = 0;  // earliest epoch attaining the best score
  double score = 0.0;       // accuracy, or negative loss for regression
};

/// Best meta-val score of a run; ties resolve to the earliest epoch.
/// Throws std::invalid_argument when there is no meta-val record.
Peak peak_epoch(std::span<const MetricsRecord> records);

/// (epoch_og - epoch_gs) / epoch_gs as a percentage.
double speedup_percent(std::uint32_t epoch_og, std::uint32_t epoch_gs);

struct RunComparison {
  std::string baseline_id;
  std::string gradshare_id;
  std::uint32_t epoch_og = 0;
  std::uint32_t epoch_gs = 0;
  double speedup_percent = 0.0;
  double peak_og = 0.0;
  double peak_gs = 0.0;
  // First epoch at which the grad-share run reaches the baseline's peak, if ever.
  std::optional<std::uint32_t> gs_reaches_og_peak;
  bool classification = true;
};

RunComparison compute_speedup(std::span<const MetricsRecord> baseline, std::span<const MetricsRecord> gradshare,
                              std::string baseline_id = "baseline", std::string gradshare_id = "gradshare");

std::string format_comparison(const RunComparison& c);

}  // namespace gradshare::harness
