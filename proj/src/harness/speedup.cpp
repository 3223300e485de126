#include "gradshare/harness/speedup.hpp"

#include <stdexcept>

#include "json.hpp"

namespace gradshare::harness {

namespace {

double score_of(const MetricsRecord& r) { return r.accuracy_mean ? *r.accuracy_mean : -r.loss_mean; }

}  // namespace

Peak peak_epoch(std::span<const MetricsRecord> records) {
  std::optional<Peak> best;
  for (const auto& r : records) {
    if (r.split != kValSplit) continue;
    const double s = score_of(r);
    if (!best || s > best->score || (s == best->score && r.epoch < best->epoch)) best = Peak{r.epoch, s};
  }
  if (!best) throw std::invalid_argument("no meta-validation records");
  if (best->epoch < 1) throw std::invalid_argument("meta-validation epochs start at 1");
  return *best;
}

double speedup_percent(std::uint32_t epoch_og, std::uint32_t epoch_gs) {
  if (epoch_og < 1 || epoch_gs < 1) throw std::invalid_argument("speed-up needs epochs of at least 1");
  return 100.0 * (static_cast<double>(epoch_og) - static_cast<double>(epoch_gs)) / static_cast<double>(epoch_gs);
}

RunComparison compute_speedup(std::span<const MetricsRecord> baseline, std::span<const MetricsRecord> gradshare,
                              std::string baseline_id, std::string gradshare_id) {
  RunComparison c;
  c.baseline_id = std::move(baseline_id);
  c.gradshare_id = std::move(gradshare_id);
  const auto og = peak_epoch(baseline);
  const auto gs = peak_epoch(gradshare);
  c.epoch_og = og.epoch;
  c.epoch_gs = gs.epoch;
  c.peak_og = og.score;
  c.peak_gs = gs.score;
  c.speedup_percent = speedup_percent(og.epoch, gs.epoch);
  for (const auto& r : gradshare) {
    if (r.split != kValSplit || score_of(r) < og.score) continue;
    if (!c.gs_reaches_og_peak || r.epoch < *c.gs_reaches_og_peak) c.gs_reaches_og_peak = r.epoch;
  }
  for (const auto& r : baseline)
    if (r.split == kValSplit) c.classification = r.accuracy_mean.has_value();
  return c;
}

std::string format_comparison(const RunComparison& c) {
  nlohmann::json j;
  j["baseline"] = c.baseline_id;
  j["gradshare"] = c.gradshare_id;
  j["metric"] = c.classification ? "accuracy" : "negative_loss";
  j["epoch_og"] = c.epoch_og;
  j["epoch_gs"] = c.epoch_gs;
  j["speedup_percent"] = c.speedup_percent;
  j["peak_og"] = c.peak_og;
  j["peak_gs"] = c.peak_gs;
  j["gs_reaches_og_peak_epoch"] = c.gs_reaches_og_peak ? nlohmann::json(*c.gs_reaches_og_peak) : nlohmann::json();
  return j.dump(2);
}

}  // namespace gradshare::harness
