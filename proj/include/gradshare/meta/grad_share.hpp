#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gradshare/ad/graph.hpp"

namespace gradshare::meta {

/// Non-finite value where a finite one is required. name() identifies the quantity.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string name, const std::string& what) : std::runtime_error(what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Meta-learned logits and the per-step store of shared gradients.
//   momentum[k]: m_k, EMA weight sigma(m_k) on the newest batch gradient
//   gate[k]:     lambda_k, weight sigma(lambda_k) on the shared gradient in the inner step
//   running_mean[k]: g-hat_k, a convex combination of unit vectors
struct GradShareState {
  std::vector<double> momentum;
  std::vector<double> gate;
  std::vector<std::vector<double>> running_mean;
  std::vector<std::uint8_t> step_initialized;

  static GradShareState create(std::size_t steps, std::size_t dim, double momentum_init = 0.0,
                               double gate_init = 0.0);

  std::size_t steps() const noexcept { return momentum.size(); }
  std::size_t dim() const noexcept { return running_mean.empty() ? 0 : running_mean.front().size(); }
  /// True once every step's running mean has been seeded by a training batch.
  bool initialized() const noexcept;
  double mean_sigma_momentum() const noexcept;
  double mean_sigma_gate() const noexcept;

  bool operator==(const GradShareState&) const = default;
};

double sigmoid(double x) noexcept;

/// Sum of the task gradients divided by (its norm + eps_norm). Gradients are
/// combined in the given order.
std::vector<double> normalized_mean_gradient(std::span<const std::vector<double>> task_grads, double eps_norm);
/// Graph form; the result stays differentiable in whatever the inputs depend on.
ad::Var normalized_mean_gradient(std::span<const ad::Var> task_grads, double eps_norm);

/// Seeds g-hat_k with g_k on first use, afterwards
///   g-hat_k = sigma(m_k) g_k + (1 - sigma(m_k)) g-hat_k(previous),
/// with the previous value entering as a constant. `momentum_logits` is a K x 1
/// node so that sigma(m_k) is differentiable. Stores the new value in `state`.
ad::Var update_running_mean(GradShareState& state, const ad::Var& g_k, std::size_t k,
                            const ad::Var& momentum_logits);

// Inner-loop step size: a scalar (MAML) or a learned per-parameter vector node (Meta-SGD).
struct StepSize {
  double scalar = 0.0;
  ad::Var vector;

  static StepSize fixed(double a) { return StepSize{a, {}}; }
  static StepSize learned(ad::Var alpha) { return StepSize{0.0, std::move(alpha)}; }
};

/// params - step * task_grad.
ad::Var plain_inner_step(const ad::Var& params, const ad::Var& task_grad, const StepSize& step);

/// delta = w g-hat_k + (1 - w) task_grad with w the 1 x 1 gate weight;
/// returns params - step * delta.
ad::Var shared_inner_step(const ad::Var& params, const ad::Var& task_grad, const ad::Var& running_mean,
                          const ad::Var& gate_weight, const StepSize& step);

}  // namespace gradshare::meta
