#include "gradshare/models/backbone.hpp"

#include <cmath>
#include <stdexcept>

#include "gradshare/util/rng.hpp"

namespace gradshare::models {

std::string_view to_string(Activation a) noexcept { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "' (expected tanh or relu)");
}

void Backbone::validate() const {
  if (layer_sizes.size() < 3) {
    throw std::invalid_argument("backbone needs at least one hidden layer, got " +
                                std::to_string(layer_sizes.size()) + " layer sizes");
  }
  for (auto w : layer_sizes) {
    if (w == 0) throw std::invalid_argument("backbone layer width must be positive");
  }
}

Backbone classification_backbone(std::size_t input_dim, std::size_t classes) {
  return Backbone{{input_dim, 64, 64, classes}, Activation::Relu, OutputKind::Classification};
}

Backbone sinusoid_backbone() { return Backbone{{1, 40, 40, 1}, Activation::Relu, OutputKind::Regression}; }

ParamLayout::ParamLayout(std::vector<ParamEntry> entries) : entries_(std::move(entries)) {
  for (auto& e : entries_) {
    e.offset = total_;
    total_ += e.size();
  }
}

ParamLayout ParamLayout::for_backbone(const Backbone& backbone) {
  backbone.validate();
  std::vector<ParamEntry> entries;
  for (std::size_t l = 0; l + 1 < backbone.layer_sizes.size(); ++l) {
    const auto fan_in = backbone.layer_sizes[l];
    const auto fan_out = backbone.layer_sizes[l + 1];
    entries.push_back({"layer" + std::to_string(l) + ".weight", fan_in, fan_out, 0});
    entries.push_back({"layer" + std::to_string(l) + ".bias", 1, fan_out, 0});
  }
  return ParamLayout(std::move(entries));
}

const ParamEntry& ParamLayout::entry(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

ParamSet::ParamSet(ParamLayout layout, std::vector<double> flat) : layout_(std::move(layout)), flat_(std::move(flat)) {
  if (flat_.size() != layout_.total_dim()) {
    throw std::invalid_argument("parameter vector has length " + std::to_string(flat_.size()) + ", layout needs " +
                                std::to_string(layout_.total_dim()));
  }
}

std::span<const double> ParamSet::values(std::string_view name) const {
  const auto& e = layout_.entry(name);
  return std::span<const double>(flat_).subspan(e.offset, e.size());
}

std::span<double> ParamSet::values(std::string_view name) {
  const auto& e = layout_.entry(name);
  return std::span<double>(flat_).subspan(e.offset, e.size());
}

ParamSet ParamSet::unflatten(const ParamLayout& layout, std::span<const double> flat) {
  return ParamSet(layout, std::vector<double>(flat.begin(), flat.end()));
}

ParamSet init_params(const Backbone& backbone, std::uint64_t seed) {
  auto layout = ParamLayout::for_backbone(backbone);
  std::vector<double> flat(layout.total_dim(), 0.0);
  util::Stream rng{seed, 0x1417ULL};
  for (const auto& e : layout.entries()) {
    if (e.rows == 1 && e.name.ends_with(".bias")) continue;
    const double s = std::sqrt(1.0 / static_cast<double>(e.rows));
    for (std::size_t i = 0; i < e.size(); ++i) flat[e.offset + i] = rng.uniform(-s, s);
  }
  return ParamSet(std::move(layout), std::move(flat));
}

ad::Var forward(const Backbone& backbone, const ParamLayout& layout, const ad::Var& params,
                const ad::Tensor& inputs) {
  if (params.rows() != layout.total_dim() || params.cols() != 1) {
    throw ad::ShapeError("forward: parameter node " + params.node()->describe() + " does not match layout of " +
                         std::to_string(layout.total_dim()) + " entries");
  }
  if (inputs.cols() != backbone.input_dim()) {
    throw ad::ShapeError("forward: inputs have width " + std::to_string(inputs.cols()) + ", backbone expects " +
                         std::to_string(backbone.input_dim()));
  }
  ad::Var h = ad::constant(inputs, "inputs");
  const auto& entries = layout.entries();
  const std::size_t layers = entries.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = entries[2 * l];
    const auto& b = entries[2 * l + 1];
    h = ad::add_row_broadcast(ad::matmul(h, ad::slice(params, w.offset, w.rows, w.cols)),
                              ad::slice(params, b.offset, b.rows, b.cols));
    if (l + 1 < layers) h = backbone.activation == Activation::Tanh ? ad::tanh(h) : ad::relu(h);
  }
  return h;
}

ad::Var task_loss(const Backbone& backbone, const ParamLayout& layout, const ad::Var& params,
                  const ad::Tensor& inputs, const ad::Tensor& targets, LossKind kind) {
  if (inputs.rows() == 0) throw std::invalid_argument("task_loss: empty example set");
  auto out = forward(backbone, layout, params, inputs);
  return kind == LossKind::CrossEntropy ? ad::softmax_cross_entropy(out, targets)
                                        : ad::mean_squared_error(out, targets);
}

double accuracy(const ad::Tensor& logits, const ad::Tensor& labels) {
  if (logits.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    if (static_cast<double>(best) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace gradshare::models
