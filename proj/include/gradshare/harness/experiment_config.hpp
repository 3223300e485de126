#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gradshare/meta/config.hpp"
#include "gradshare/models/backbone.hpp"
#include "gradshare/tasks/task.hpp"

namespace gradshare::harness {

// Everything a run needs besides its seed.
struct ExperimentConfig {
  meta::MetaConfig meta;
  tasks::TaskDistribution tasks;  // split is ignored; training uses meta-train
  std::vector<std::size_t> hidden_sizes{64, 64};
  models::Activation activation = models::Activation::Relu;
  std::size_t val_episodes = 600;
  std::uint64_t val_seed = 7;
  std::string val_episodes_file;  // use a fixed file instead of sampling

  models::Backbone backbone() const;
  tasks::TaskDistribution split(tasks::Split s) const;
  void validate() const;
};

/// Desk-scale defaults: 30 epochs of 100 iterations, K = 5, inner lr 0.1, T = 5.
ExperimentConfig desk_defaults(tasks::Family family);

/// Starts from desk_defaults(family) and applies every key; unknown keys throw util::ConfigError.
ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical text that parse_experiment_config reads back to the same config.
std::string describe_experiment(const ExperimentConfig& c);

}  // namespace gradshare::harness
