#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradshare/ad/graph.hpp"

namespace gradshare::models {

enum class Activation : std::uint8_t { Tanh, Relu };
enum class OutputKind : std::uint8_t { Regression, Classification };
enum class LossKind : std::uint8_t { MeanSquaredError = 0, CrossEntropy = 1 };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view s);

// Dense network: layer_sizes = {input, hidden..., output}.
struct Backbone {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::Relu;
  OutputKind output = OutputKind::Classification;

  /// Throws std::invalid_argument unless there is at least one hidden layer and no zero width.
  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }

  bool operator==(const Backbone&) const = default;
};

/// {input, 64, 64, classes}
Backbone classification_backbone(std::size_t input_dim, std::size_t classes);
/// {1, 40, 40, 1}
Backbone sinusoid_backbone();

struct ParamEntry {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const ParamEntry&) const = default;
};

// Ordered names and shapes of a parameter vector. Layer l contributes
// "layer<l>.weight" (fan_in x fan_out) then "layer<l>.bias" (1 x fan_out).
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<ParamEntry> entries);
  static ParamLayout for_backbone(const Backbone& backbone);

  const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
  std::size_t total_dim() const noexcept { return total_; }
  const ParamEntry& entry(std::string_view name) const;

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<ParamEntry> entries_;
  std::size_t total_ = 0;
};

// Named parameter arrays backed by one flat vector.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(ParamLayout layout, std::vector<double> flat);

  const ParamLayout& layout() const noexcept { return layout_; }
  std::size_t total_dim() const noexcept { return layout_.total_dim(); }

  std::span<const double> values(std::string_view name) const;
  std::span<double> values(std::string_view name);

  std::vector<double> flatten() const { return flat_; }
  const std::vector<double>& flat() const noexcept { return flat_; }
  static ParamSet unflatten(const ParamLayout& layout, std::span<const double> flat);

  bool operator==(const ParamSet&) const = default;

 private:
  ParamLayout layout_;
  std::vector<double> flat_;
};

/// Weights uniform(-s, s) with s = sqrt(1 / fan_in), biases zero.
ParamSet init_params(const Backbone& backbone, std::uint64_t seed);

/// Logits or predictions (rows = batch) for a flat total_dim x 1 parameter node.
ad::Var forward(const Backbone& backbone, const ParamLayout& layout, const ad::Var& params,
                const ad::Tensor& inputs);

/// Mean loss over the examples. Cross-entropy targets are n x 1 class indices.
ad::Var task_loss(const Backbone& backbone, const ParamLayout& layout, const ad::Var& params,
                  const ad::Tensor& inputs, const ad::Tensor& targets, LossKind kind);

/// Fraction of rows whose argmax matches the label.
double accuracy(const ad::Tensor& logits, const ad::Tensor& labels);

}  // namespace gradshare::models
