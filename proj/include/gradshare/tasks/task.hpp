#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "gradshare/ad/tensor.hpp"
#include "gradshare/models/backbone.hpp"

namespace gradshare::tasks {

using models::LossKind;

struct Examples {
  ad::Tensor inputs;   // n x input_dim
  ad::Tensor targets;  // n x 1 class index (cross-entropy) or n x output_dim (mse)

  std::size_t size() const noexcept { return inputs.rows(); }
  bool operator==(const Examples&) const = default;
};

// One episode. Support is used for inner-loop adaptation, query for the outer loss.
struct Task {
  Examples support;
  Examples query;
  LossKind loss = LossKind::CrossEntropy;
  std::uint16_t way = 0;  // 0 for regression
  std::uint64_t task_id = 0;

  bool operator==(const Task&) const = default;
};

enum class Family : std::uint8_t { Sinusoid, GaussianClasses };
enum class Split : std::uint8_t { MetaTrain = 0, MetaVal = 1, MetaTest = 2 };

std::string_view to_string(Family f) noexcept;
std::string_view to_string(Split s) noexcept;
Family parse_family(std::string_view s);
Split parse_split(std::string_view s);

struct SinusoidParams {
  double amplitude_min = 0.1;
  double amplitude_max = 5.0;
  double phase_min = 0.0;
  double phase_max = std::numbers::pi;
  double x_min = -5.0;
  double x_max = 5.0;
  std::size_t max_points = 1000;  // support + query capacity per task
};

struct GaussianClassesParams {
  std::size_t input_dim = 16;
  double prototype_norm = 1.0;
  double noise = 0.35;
  std::size_t train_classes = 100;
  std::size_t val_classes = 50;
  std::size_t test_classes = 50;
  std::size_t examples_per_class = 600;  // shot + query capacity per class
  std::uint64_t world_seed = 0;          // fixes the class prototypes independently of the run seed

  std::size_t classes_in(Split s) const noexcept;
};

// For classification, shot and query are per class; for sinusoid they are point counts.
struct TaskDistribution {
  Family family = Family::GaussianClasses;
  Split split = Split::MetaTrain;
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t query = 15;
  SinusoidParams sinusoid;
  GaussianClassesParams gaussian;

  LossKind loss_kind() const noexcept;
  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  /// Throws std::invalid_argument when shot/query/way exceed the configured capacity.
  void validate() const;
};

/// Unit-direction prototype of a class, scaled to prototype_norm.
std::vector<double> class_prototype(const GaussianClassesParams& p, Split split, std::size_t class_index);

/// Deterministic in (dist, seed, index). The per-task stream is keyed by (seed, split, index).
Task sample_task(const TaskDistribution& dist, std::uint64_t seed, std::uint64_t index);

/// Tasks first_index .. first_index + count - 1, in that order.
std::vector<Task> sample_batch(const TaskDistribution& dist, std::size_t count, std::uint64_t seed,
                               std::uint64_t first_index = 0);

}  // namespace gradshare::tasks
