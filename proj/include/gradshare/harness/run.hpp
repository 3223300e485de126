#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gradshare/harness/experiment_config.hpp"
#include "gradshare/meta/train.hpp"

namespace gradshare::harness {

// Files of a run directory.
struct RunPaths {
  std::string dir;

  std::string config() const { return dir + "/config.txt"; }
  std::string seed() const { return dir + "/seed.txt"; }
  std::string metrics() const { return dir + "/metrics.jsonl"; }
  std::string timing() const { return dir + "/timing.jsonl"; }
  std::string val_episodes() const { return dir + "/val_episodes.bin"; }
  std::string checkpoints() const { return dir + "/checkpoints"; }
  std::string checkpoint(std::uint32_t epoch) const;
  std::string final_checkpoint() const { return dir + "/final.gsck"; }
};

struct RunOutcome {
  int exit_code = 0;  // 0 completed, 2 numerical abort
  std::vector<meta::EpochRecord> history;
  std::optional<meta::AbortDiagnostic> abort;
};

/// Meta-validation episodes of an experiment: the configured file, or a fresh
/// sample of the meta-val split keyed by val_seed.
std::vector<tasks::Task> validation_episodes(const ExperimentConfig& config);

/// Runs meta-training into `out_dir`, replacing any earlier run there. Metrics
/// are streamed one line per record; on a numerical abort the metrics written so
/// far are kept and an abort record is appended.
RunOutcome run_experiment(const ExperimentConfig& config, std::uint64_t seed, const std::string& out_dir,
                          std::ostream* progress = nullptr);

}  // namespace gradshare::harness
