#pragma once

#include <span>
#include <string>
#include <vector>

#include "gradshare/meta/checkpoint.hpp"

namespace gradshare::harness {

/// Each checkpoint adapts to every task with its own running means; query
/// outputs (class probabilities or predictions) are averaged across checkpoints
/// before scoring. Throws std::invalid_argument for an empty or incompatible set.
meta::EvalSummary ensemble_evaluate(std::span<const meta::Checkpoint> checkpoints, std::span<const tasks::Task> tasks);

/// The best `top` checkpoints (by stored meta-val score, ties to the earlier
/// epoch) among the *.gsck files of a directory.
std::vector<meta::Checkpoint> load_top_checkpoints(const std::string& dir, std::size_t top);

}  // namespace gradshare::harness
