#pragma once

#include <span>
#include <vector>

#include "gradshare/meta/adam.hpp"
#include "gradshare/meta/config.hpp"
#include "gradshare/meta/grad_share.hpp"
#include "gradshare/models/backbone.hpp"
#include "gradshare/tasks/task.hpp"

namespace gradshare::meta {

struct ModelSpec {
  models::Backbone backbone;
  models::ParamLayout layout;

  static ModelSpec from(const models::Backbone& b) { return {b, models::ParamLayout::for_backbone(b)}; }
};

// Current values of everything the outer loop optimizes.
struct MetaParams {
  std::vector<double> theta;
  std::vector<double> inner_lr;  // Meta-SGD only; empty for MAML
  std::vector<double> momentum;
  std::vector<double> gate;

  bool operator==(const MetaParams&) const = default;
};

// Graph leaves for one outer iteration.
struct OuterLeaves {
  ad::Var theta;
  ad::Var inner_lr;  // empty for MAML
  ad::Var momentum;
  ad::Var gate;

  static OuterLeaves from(const MetaParams& p);
};

struct AdaptResult {
  std::vector<ad::Var> adapted;                 // theta_{t,K} per task
  std::vector<std::vector<double>> train_loss;  // [task][step]
  std::vector<std::vector<double>> shared;      // g_k values per step (grad-share only)
};

/// Training-time inner loop over a batch. Builds the differentiable graph of
/// K steps for every task; with grad-share on, computes g_k across the batch,
/// updates the running means in `state` and applies the shared step.
AdaptResult inner_adapt(const ModelSpec& model, const MetaConfig& config, const OuterLeaves& leaves,
                        std::span<const tasks::Task> batch, GradShareState& state);

struct MetaObjective {
  ad::Var loss;            // mean query loss over the batch
  double accuracy = 0.0;   // mean query accuracy (classification)
  AdaptResult adapt;
};

MetaObjective meta_objective(const ModelSpec& model, const MetaConfig& config, const OuterLeaves& leaves,
                             std::span<const tasks::Task> batch, GradShareState& state);

struct MetaGradient {
  MetaParams grad;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Gradient of the mean query loss with respect to (theta, alpha, m, lambda).
/// Advances the running means in `state` exactly like a training iteration.
MetaGradient meta_gradient(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                           std::span<const tasks::Task> batch, GradShareState& state);

/// One Adam step on the meta-parameters. Throws NumericalError naming the first
/// parameter group with a non-finite gradient; params are unchanged in that case.
void outer_step(const MetaConfig& config, MetaParams& params, const MetaGradient& g, Adam& adam);

MetaParams initial_meta_params(const MetaConfig& config, const models::ParamSet& theta);

// Owns the meta-parameters, the shared-gradient store and the outer optimizer for one run.
class MetaLearner {
 public:
  MetaLearner(MetaConfig config, models::Backbone backbone, std::uint64_t seed);
  MetaLearner(MetaConfig config, models::Backbone backbone, MetaParams params, GradShareState state);

  /// Inner loop plus outer update on one batch. Returns the pre-update objective.
  MetaGradient train_iteration(std::span<const tasks::Task> batch);

  const MetaConfig& config() const noexcept { return config_; }
  const ModelSpec& model() const noexcept { return model_; }
  const MetaParams& params() const noexcept { return params_; }
  /// m and lambda are mirrored from params() into the returned state.
  GradShareState state() const;

 private:
  MetaConfig config_;
  ModelSpec model_;
  MetaParams params_;
  GradShareState store_;
  Adam adam_;
};

}  // namespace gradshare::meta
