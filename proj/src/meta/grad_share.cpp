#include "gradshare/meta/grad_share.hpp"

#include <cmath>

namespace gradshare::meta {

GradShareState GradShareState::create(std::size_t steps, std::size_t dim, double momentum_init, double gate_init) {
  GradShareState s;
  s.momentum.assign(steps, momentum_init);
  s.gate.assign(steps, gate_init);
  s.running_mean.assign(steps, std::vector<double>(dim, 0.0));
  s.step_initialized.assign(steps, 0);
  return s;
}

bool GradShareState::initialized() const noexcept {
  if (step_initialized.empty()) return false;
  for (auto f : step_initialized) {
    if (!f) return false;
  }
  return true;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double GradShareState::mean_sigma_momentum() const noexcept {
  if (momentum.empty()) return 0.0;
  double s = 0.0;
  for (double m : momentum) s += sigmoid(m);
  return s / static_cast<double>(momentum.size());
}

double GradShareState::mean_sigma_gate() const noexcept {
  if (gate.empty()) return 0.0;
  double s = 0.0;
  for (double l : gate) s += sigmoid(l);
  return s / static_cast<double>(gate.size());
}

std::vector<double> normalized_mean_gradient(std::span<const std::vector<double>> task_grads, double eps_norm) {
  if (task_grads.empty()) throw std::invalid_argument("normalized_mean_gradient: no task gradients");
  const std::size_t dim = task_grads.front().size();
  std::vector<double> sum(dim, 0.0);
  for (std::size_t t = 0; t < task_grads.size(); ++t) {
    if (task_grads[t].size() != dim) {
      throw std::invalid_argument("normalized_mean_gradient: task " + std::to_string(t) + " has dimension " +
                                  std::to_string(task_grads[t].size()) + ", expected " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      if (!std::isfinite(task_grads[t][i])) {
        throw NumericalError("task_gradient", "normalized_mean_gradient: non-finite entry in task " +
                                                  std::to_string(t) + " gradient");
      }
      sum[i] += task_grads[t][i];
    }
  }
  double norm = 0.0;
  for (double v : sum) norm += v * v;
  norm = std::sqrt(norm);
  const double inv = 1.0 / (norm + eps_norm);
  for (auto& v : sum) v *= inv;
  return sum;
}

ad::Var normalized_mean_gradient(std::span<const ad::Var> task_grads, double eps_norm) {
  if (task_grads.empty()) throw std::invalid_argument("normalized_mean_gradient: no task gradients");
  ad::Var total = task_grads.front();
  for (std::size_t t = 1; t < task_grads.size(); ++t) total = total + task_grads[t];
  if (!ad::all_finite(total.value())) {
    throw NumericalError("task_gradient", "normalized_mean_gradient: non-finite task gradient");
  }
  return ad::scalar_mul(ad::reciprocal(ad::affine(ad::norm2(total), 1.0, eps_norm)), total);
}

ad::Var update_running_mean(GradShareState& state, const ad::Var& g_k, std::size_t k,
                            const ad::Var& momentum_logits) {
  if (k >= state.steps()) {
    throw std::invalid_argument("update_running_mean: step " + std::to_string(k) + " out of range for K = " +
                                std::to_string(state.steps()));
  }
  if (g_k.value().size() != state.running_mean[k].size() || g_k.cols() != 1) {
    throw std::invalid_argument("update_running_mean: gradient of shape " + g_k.value().shape_string() +
                                " does not match stored dimension " + std::to_string(state.running_mean[k].size()));
  }
  ad::Var next;
  if (!state.step_initialized[k]) {
    next = g_k;
  } else {
    const ad::Var w = ad::sigmoid(ad::slice(momentum_logits, k, 1, 1));
    const ad::Var previous = ad::constant(ad::Tensor::column(state.running_mean[k]), "running_mean");
    next = ad::scalar_mul(w, g_k) + ad::scalar_mul(ad::affine(w, -1.0, 1.0), previous);
  }
  state.running_mean[k] = next.value().values();
  state.step_initialized[k] = 1;
  return next;
}

ad::Var plain_inner_step(const ad::Var& params, const ad::Var& task_grad, const StepSize& step) {
  if (step.vector) return params - step.vector * task_grad;
  return params - ad::scale(task_grad, step.scalar);
}

ad::Var shared_inner_step(const ad::Var& params, const ad::Var& task_grad, const ad::Var& running_mean,
                          const ad::Var& gate_weight, const StepSize& step) {
  if (!running_mean) throw std::invalid_argument("shared_inner_step: no running mean for this step");
  const ad::Var delta =
      ad::scalar_mul(gate_weight, running_mean) + ad::scalar_mul(ad::affine(gate_weight, -1.0, 1.0), task_grad);
  return plain_inner_step(params, delta, step);
}

}  // namespace gradshare::meta
