#include "gradshare/meta/evaluate.hpp"

#include <cmath>

namespace gradshare::meta {

std::vector<double> adapt_task(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                               const GradShareState& state, const tasks::Task& task) {
  if (config.grad_share && (!state.initialized() || state.steps() != config.inner_steps)) {
    throw std::invalid_argument("adapt_task: gradient sharing is on but no stored running mean exists for every step");
  }
  std::vector<double> theta = params.theta;
  const bool vector_lr = config.learner == Learner::MetaSgd;
  for (std::size_t k = 0; k < config.inner_steps; ++k) {
    const auto p = ad::leaf(ad::Tensor::column(theta));
    const auto loss =
        models::task_loss(model.backbone, model.layout, p, task.support.inputs, task.support.targets, task.loss);
    const auto g = ad::grad(loss, {p})[0].value().values();
    double w = 0.0;
    if (config.grad_share) w = config.gate_weight_override ? *config.gate_weight_override : sigmoid(params.gate[k]);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double delta = config.grad_share ? w * state.running_mean[k][i] + (1.0 - w) * g[i] : g[i];
      theta[i] -= (vector_lr ? params.inner_lr[i] : config.inner_lr) * delta;
    }
  }
  return theta;
}

TaskOutcome score_outputs(const tasks::Task& task, ad::Tensor outputs) {
  TaskOutcome o;
  const auto& y = task.query.targets;
  if (task.loss == models::LossKind::CrossEntropy) {
    double nll = 0.0;
    for (std::size_t r = 0; r < outputs.rows(); ++r) {
      nll -= std::log(std::max(outputs(r, static_cast<std::size_t>(y[r])), 1e-300));
    }
    o.loss = nll / static_cast<double>(outputs.rows());
    o.accuracy = models::accuracy(outputs, y);
  } else {
    double se = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) se += (outputs[i] - y[i]) * (outputs[i] - y[i]);
    o.loss = se / static_cast<double>(outputs.size());
  }
  o.outputs = std::move(outputs);
  return o;
}

TaskOutcome evaluate_task(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                          const GradShareState& state, const tasks::Task& task) {
  const auto theta = adapt_task(model, config, params, state, task);
  ad::NoGradGuard no_grad;
  auto out = models::forward(model.backbone, model.layout, ad::constant(ad::Tensor::column(theta)),
                             task.query.inputs);
  if (task.loss == models::LossKind::CrossEntropy) out = ad::softmax(out);
  return score_outputs(task, out.value());
}

EvalSummary summarize(std::span<const TaskOutcome> outcomes, bool classification) {
  std::vector<double> losses, accs;
  losses.reserve(outcomes.size());
  accs.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    losses.push_back(o.loss);
    accs.push_back(o.accuracy);
  }
  EvalSummary s;
  s.classification = classification;
  s.loss = util::mean_ci95(losses);
  s.accuracy = util::mean_ci95(accs);
  return s;
}

EvalSummary evaluate(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                     const GradShareState& state, std::span<const tasks::Task> tasks) {
  std::vector<TaskOutcome> outcomes;
  outcomes.reserve(tasks.size());
  bool classification = true;
  for (const auto& t : tasks) {
    auto o = evaluate_task(model, config, params, state, t);
    o.outputs = {};
    outcomes.push_back(std::move(o));
    classification = t.loss == models::LossKind::CrossEntropy;
  }
  return summarize(outcomes, classification);
}

}  // namespace gradshare::meta
