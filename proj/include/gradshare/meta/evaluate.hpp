#pragma once

#include <span>
#include <vector>

#include "gradshare/meta/learner.hpp"
#include "gradshare/util/stats.hpp"

namespace gradshare::meta {

/// K regularized inner steps on the support set using the stored running means.
/// Never modifies the store. Throws if grad-share is on and the store is unseeded.
std::vector<double> adapt_task(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                               const GradShareState& state, const tasks::Task& task);

struct TaskOutcome {
  double loss = 0.0;
  double accuracy = 0.0;
  // Query outputs after adaptation: class probabilities, or regression predictions.
  ad::Tensor outputs;
};

TaskOutcome evaluate_task(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                          const GradShareState& state, const tasks::Task& task);

struct EvalSummary {
  util::MeanWithInterval loss;
  util::MeanWithInterval accuracy;
  bool classification = true;

  /// Model-selection score: accuracy for classification, negative loss for regression.
  double score() const noexcept { return classification ? accuracy.mean : -loss.mean; }
};

EvalSummary summarize(std::span<const TaskOutcome> outcomes, bool classification);

EvalSummary evaluate(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                     const GradShareState& state, std::span<const tasks::Task> tasks);

/// Loss and accuracy of averaged query outputs (probabilities or predictions).
TaskOutcome score_outputs(const tasks::Task& task, ad::Tensor outputs);

}  // namespace gradshare::meta
