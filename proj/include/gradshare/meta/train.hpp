#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "gradshare/meta/checkpoint.hpp"
#include "gradshare/tasks/task.hpp"

namespace gradshare::meta {

struct SplitStats {
  double loss_mean = 0.0;
  double loss_ci95 = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_ci95 = 0.0;
};

struct EpochRecord {
  std::uint32_t epoch = 0;
  SplitStats train;  // query loss/accuracy of the training batches, averaged over the epoch
  EvalSummary val;
  double sigma_momentum_mean = 0.5;
  double sigma_gate_mean = 0.5;
  double wall_seconds = 0.0;
};

struct AbortDiagnostic {
  std::uint32_t epoch = 0;
  std::uint64_t iteration = 0;  // 1-based within the epoch
  std::string quantity;
  std::string message;
  double theta_norm = 0.0;
  double inner_lr_norm = 0.0;
  double momentum_norm = 0.0;
  double gate_norm = 0.0;
};

/// A meta-training run hit a non-finite loss or gradient.
class NumericalAbort : public std::runtime_error {
 public:
  explicit NumericalAbort(AbortDiagnostic d);
  const AbortDiagnostic& diagnostic() const noexcept { return diag_; }

 private:
  AbortDiagnostic diag_;
};

struct TrainOptions {
  tasks::TaskDistribution train_tasks;
  std::vector<tasks::Task> val_episodes;
  std::uint64_t seed = 0;
  // Called after each epoch's meta-validation; `retained` is true if the epoch entered the top-N.
  std::function<void(const EpochRecord&, const MetaLearner&, bool retained)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<Checkpoint> top;  // best meta-val score first; ties keep the earlier epoch
  Checkpoint final_state;
};

/// Runs epochs x iterations_per_epoch outer steps. Batch i draws tasks
/// i*T .. i*T+T-1 of the training distribution; meta-validation uses the fixed
/// episodes and never touches the running means.
TrainResult meta_train(const MetaConfig& config, const models::Backbone& backbone, const TrainOptions& options);

/// Seed used for parameter initialization within a run.
std::uint64_t init_seed(std::uint64_t run_seed) noexcept;

}  // namespace gradshare::meta
