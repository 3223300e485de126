#include "gradshare/harness/run.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gradshare/harness/metrics.hpp"
#include "gradshare/meta/checkpoint.hpp"
#include "gradshare/tasks/episodes.hpp"
#include "json.hpp"

namespace gradshare::harness {

namespace fs = std::filesystem;

std::string RunPaths::checkpoint(std::uint32_t epoch) const {
  char name[32];
  std::snprintf(name, sizeof name, "/epoch_%04u.gsck", epoch);
  return checkpoints() + name;
}

std::vector<tasks::Task> validation_episodes(const ExperimentConfig& config) {
  if (!config.val_episodes_file.empty()) return tasks::read_episodes(config.val_episodes_file);
  return tasks::sample_batch(config.split(tasks::Split::MetaVal), config.val_episodes, config.val_seed);
}

RunOutcome run_experiment(const ExperimentConfig& config, std::uint64_t seed, const std::string& out_dir,
                          std::ostream* progress) {
  config.validate();
  const RunPaths paths{out_dir};
  fs::create_directories(out_dir);
  fs::remove(paths.metrics());
  fs::remove(paths.timing());
  fs::remove(paths.final_checkpoint());
  fs::remove_all(paths.checkpoints());
  fs::create_directories(paths.checkpoints());

  {
    std::ofstream(paths.config(), std::ios::binary) << describe_experiment(config);
    std::ofstream(paths.seed(), std::ios::binary) << "seed = " << seed << '\n';
  }
  const auto val = validation_episodes(config);
  tasks::write_episodes(paths.val_episodes(), val);

  RunOutcome outcome;
  MetricsWriter metrics(paths.metrics());
  MetricsWriter timing(paths.timing());
  std::vector<std::pair<double, std::uint32_t>> kept;  // mirrors the trainer's top-N order

  meta::TrainOptions options;
  options.train_tasks = config.split(tasks::Split::MetaTrain);
  options.val_episodes = val;
  options.seed = seed;
  options.on_epoch = [&](const meta::EpochRecord& rec, const meta::MetaLearner& learner, bool retained) {
    outcome.history.push_back(rec);
    for (const auto& r : records_for_epoch(rec)) metrics.write(r);
    timing.write_line(nlohmann::json{{"epoch", rec.epoch}, {"wall_seconds", rec.wall_seconds}}.dump());
    if (retained) {
      const double score = rec.val.score();
      auto pos = std::find_if(kept.begin(), kept.end(), [score](const auto& k) { return score > k.first; });
      kept.insert(pos, {score, rec.epoch});
      meta::write_checkpoint(paths.checkpoint(rec.epoch), meta::make_checkpoint(learner, rec.epoch, score));
      if (kept.size() > config.meta.top_n) {
        fs::remove(paths.checkpoint(kept.back().second));
        kept.pop_back();
      }
    }
    if (progress) {
      *progress << "epoch " << rec.epoch << "/" << config.meta.epochs << "  train loss " << rec.train.loss_mean
                << "  val loss " << rec.val.loss.mean;
      if (rec.val.classification) *progress << "  val acc " << rec.val.accuracy.mean;
      *progress << "  sigma(m) " << rec.sigma_momentum_mean << "  sigma(lambda) " << rec.sigma_gate_mean << '\n';
    }
  };

  try {
    const auto result = meta::meta_train(config.meta, config.backbone(), options);
    meta::write_checkpoint(paths.final_checkpoint(), result.final_state);
  } catch (const meta::NumericalAbort& e) {
    metrics.write_abort(e.diagnostic());
    outcome.exit_code = 2;
    outcome.abort = e.diagnostic();
    if (progress) *progress << "numerical abort: " << e.what() << '\n';
  }
  return outcome;
}

}  // namespace gradshare::harness
