#include "gradshare/harness/ensemble.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

namespace gradshare::harness {

meta::EvalSummary ensemble_evaluate(std::span<const meta::Checkpoint> checkpoints, std::span<const tasks::Task> tasks) {
  if (checkpoints.empty()) throw std::invalid_argument("ensemble needs at least one checkpoint");
  const auto& first = checkpoints.front();
  for (const auto& c : checkpoints) {
    if (c.backbone.layer_sizes != first.backbone.layer_sizes || c.backbone.output != first.backbone.output) {
      throw std::invalid_argument("ensemble: checkpoint of epoch " + std::to_string(c.epoch) +
                                  " has a different model shape");
    }
  }

  std::vector<meta::TaskOutcome> outcomes;
  outcomes.reserve(tasks.size());
  for (const auto& task : tasks) {
    ad::Tensor sum;
    for (const auto& c : checkpoints) {
      auto o = meta::evaluate_task(c.model(), c.config, c.meta_params(), c.state, task);
      if (sum.size() == 0) {
        sum = std::move(o.outputs);
      } else {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.outputs[i];
      }
    }
    if (checkpoints.size() > 1) {
      const double inv = 1.0 / static_cast<double>(checkpoints.size());
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] *= inv;
    }
    outcomes.push_back(meta::score_outputs(task, std::move(sum)));
  }
  return meta::summarize(outcomes, first.backbone.output == models::OutputKind::Classification);
}

std::vector<meta::Checkpoint> load_top_checkpoints(const std::string& dir, std::size_t top) {
  if (top < 1) throw std::invalid_argument("--top must be at least 1");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".gsck") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<meta::Checkpoint> all;
  for (const auto& f : files) all.push_back(meta::read_checkpoint(f.string()));
  if (all.empty()) throw std::invalid_argument("no checkpoints in '" + dir + "'");
  std::stable_sort(all.begin(), all.end(), [](const meta::Checkpoint& a, const meta::Checkpoint& b) {
    if (a.val_score != b.val_score) return a.val_score > b.val_score;
    return a.epoch < b.epoch;
  });
  if (all.size() > top) all.resize(top);
  return all;
}

}  // namespace gradshare::harness
