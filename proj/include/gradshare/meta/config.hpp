#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gradshare/models/backbone.hpp"
#include "gradshare/util/key_value.hpp"

namespace gradshare::meta {

enum class Learner : std::uint8_t { Maml, MetaSgd };

std::string_view to_string(Learner l) noexcept;
Learner parse_learner(std::string_view s);

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamSettings&) const = default;
};

struct MetaConfig {
  Learner learner = Learner::Maml;
  bool grad_share = true;
  std::size_t inner_steps = 5;  // K
  std::size_t task_batch = 5;   // T
  double inner_lr = 0.1;        // MAML step size; initial value of every Meta-SGD entry
  AdamSettings outer;
  std::size_t iterations_per_epoch = 1000;
  std::size_t epochs = 150;
  // Cuts the theta path through the batch's shared gradient; m and lambda stay differentiable.
  bool detach_shared_gradient = false;
  double eps_norm = 1e-12;
  double momentum_init = 0.0;
  double gate_init = 0.0;
  // When false, m and lambda keep their initial logits for the whole run.
  bool train_gates = true;
  // Replaces sigmoid(lambda_k) by a fixed weight. 0 reduces the step to plain gradient descent.
  std::optional<double> gate_weight_override;
  std::size_t top_n = 5;

  /// Throws std::invalid_argument for non-positive K, T, learning rates or schedule.
  void validate() const;
  bool operator==(const MetaConfig&) const = default;
};

/// Reads the meta-learning keys it knows; other keys are left for the caller.
MetaConfig read_meta_config(util::KeyValueFile& kv, const MetaConfig& defaults = {});
models::Backbone read_backbone(util::KeyValueFile& kv, const models::Backbone& defaults);

/// Canonical key = value text for a config and backbone; parseable by the readers above.
std::string describe_model(const MetaConfig& config, const models::Backbone& backbone);
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace gradshare::meta
