#include "gradshare/meta/learner.hpp"

#include <cmath>

namespace gradshare::meta {

namespace {

ad::Var gate_weight(const MetaConfig& config, const OuterLeaves& leaves, std::size_t k) {
  if (config.gate_weight_override) return ad::constant(ad::Tensor::scalar(*config.gate_weight_override));
  return ad::sigmoid(ad::slice(leaves.gate, k, 1, 1));
}

StepSize step_size(const MetaConfig& config, const OuterLeaves& leaves) {
  if (config.learner == Learner::MetaSgd) return StepSize::learned(leaves.inner_lr);
  return StepSize::fixed(config.inner_lr);
}

bool finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

OuterLeaves OuterLeaves::from(const MetaParams& p) {
  OuterLeaves l;
  l.theta = ad::leaf(ad::Tensor::column(p.theta), "theta");
  if (!p.inner_lr.empty()) l.inner_lr = ad::leaf(ad::Tensor::column(p.inner_lr), "inner_lr");
  l.momentum = ad::leaf(ad::Tensor::column(p.momentum), "momentum");
  l.gate = ad::leaf(ad::Tensor::column(p.gate), "gate");
  return l;
}

AdaptResult inner_adapt(const ModelSpec& model, const MetaConfig& config, const OuterLeaves& leaves,
                        std::span<const tasks::Task> batch, GradShareState& state) {
  if (batch.empty()) throw std::invalid_argument("inner_adapt: empty task batch");
  if (config.grad_share && (state.steps() != config.inner_steps || state.dim() != model.layout.total_dim())) {
    throw std::invalid_argument("inner_adapt: shared-gradient store does not match K or the parameter dimension");
  }
  const StepSize step = step_size(config, leaves);
  AdaptResult r;
  r.adapted.assign(batch.size(), leaves.theta);
  r.train_loss.assign(batch.size(), {});

  std::vector<ad::Var> grads(batch.size());
  for (std::size_t k = 0; k < config.inner_steps; ++k) {
    for (std::size_t t = 0; t < batch.size(); ++t) {
      const auto& task = batch[t];
      auto loss = models::task_loss(model.backbone, model.layout, r.adapted[t], task.support.inputs,
                                    task.support.targets, task.loss);
      r.train_loss[t].push_back(loss.value().item());
      grads[t] = ad::grad(loss, {r.adapted[t]}, /*create_graph=*/true)[0];
    }
    if (!config.grad_share) {
      for (std::size_t t = 0; t < batch.size(); ++t) r.adapted[t] = plain_inner_step(r.adapted[t], grads[t], step);
      continue;
    }
    ad::Var shared;
    if (config.detach_shared_gradient) {
      std::vector<ad::Var> cut;
      cut.reserve(grads.size());
      for (const auto& g : grads) cut.push_back(ad::detach(g));
      shared = normalized_mean_gradient(cut, config.eps_norm);
    } else {
      shared = normalized_mean_gradient(grads, config.eps_norm);
    }
    r.shared.push_back(shared.value().values());
    const ad::Var running = update_running_mean(state, shared, k, leaves.momentum);
    const ad::Var w = gate_weight(config, leaves, k);
    for (std::size_t t = 0; t < batch.size(); ++t) {
      r.adapted[t] = shared_inner_step(r.adapted[t], grads[t], running, w, step);
    }
  }
  return r;
}

MetaObjective meta_objective(const ModelSpec& model, const MetaConfig& config, const OuterLeaves& leaves,
                             std::span<const tasks::Task> batch, GradShareState& state) {
  MetaObjective obj;
  obj.adapt = inner_adapt(model, config, leaves, batch, state);
  ad::Var total;
  double acc = 0.0;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& task = batch[t];
    auto out = models::forward(model.backbone, model.layout, obj.adapt.adapted[t], task.query.inputs);
    ad::Var loss;
    if (task.loss == models::LossKind::CrossEntropy) {
      loss = ad::softmax_cross_entropy(out, task.query.targets);
      acc += models::accuracy(out.value(), task.query.targets);
    } else {
      loss = ad::mean_squared_error(out, task.query.targets);
    }
    total = total ? total + loss : loss;
  }
  const double inv_t = 1.0 / static_cast<double>(batch.size());
  obj.loss = ad::scale(total, inv_t);
  obj.accuracy = acc * inv_t;
  return obj;
}

MetaGradient meta_gradient(const ModelSpec& model, const MetaConfig& config, const MetaParams& params,
                           std::span<const tasks::Task> batch, GradShareState& state) {
  const auto leaves = OuterLeaves::from(params);
  auto obj = meta_objective(model, config, leaves, batch, state);

  std::vector<ad::Var> wrt{leaves.theta, leaves.momentum, leaves.gate};
  if (leaves.inner_lr) wrt.push_back(leaves.inner_lr);
  auto g = ad::grad(obj.loss, wrt, /*create_graph=*/false);

  MetaGradient out;
  out.loss = obj.loss.value().item();
  out.accuracy = obj.accuracy;
  out.grad.theta = g[0].value().values();
  out.grad.momentum = g[1].value().values();
  out.grad.gate = g[2].value().values();
  if (leaves.inner_lr) out.grad.inner_lr = g[3].value().values();
  return out;
}

void outer_step(const MetaConfig& config, MetaParams& params, const MetaGradient& g, Adam& adam) {
  if (!std::isfinite(g.loss)) throw NumericalError("loss", "outer_step: non-finite meta-objective");
  if (!finite(g.grad.theta)) throw NumericalError("theta", "outer_step: non-finite gradient for 'theta'");
  if (!finite(g.grad.inner_lr)) throw NumericalError("inner_lr", "outer_step: non-finite gradient for 'inner_lr'");
  if (!finite(g.grad.momentum)) throw NumericalError("momentum", "outer_step: non-finite gradient for 'momentum'");
  if (!finite(g.grad.gate)) throw NumericalError("gate", "outer_step: non-finite gradient for 'gate'");

  std::vector<AdamParam> groups;
  groups.push_back({"theta", params.theta, g.grad.theta});
  if (config.learner == Learner::MetaSgd) groups.push_back({"inner_lr", params.inner_lr, g.grad.inner_lr});
  if (config.grad_share && config.train_gates) {
    groups.push_back({"momentum", params.momentum, g.grad.momentum});
    groups.push_back({"gate", params.gate, g.grad.gate});
  }
  adam.step(groups);
}

MetaParams initial_meta_params(const MetaConfig& config, const models::ParamSet& theta) {
  MetaParams p;
  p.theta = theta.flatten();
  if (config.learner == Learner::MetaSgd) p.inner_lr.assign(p.theta.size(), config.inner_lr);
  p.momentum.assign(config.inner_steps, config.momentum_init);
  p.gate.assign(config.inner_steps, config.gate_init);
  return p;
}

MetaLearner::MetaLearner(MetaConfig config, models::Backbone backbone, std::uint64_t seed)
    : config_(std::move(config)), model_(ModelSpec::from(backbone)), adam_(config_.outer) {
  config_.validate();
  params_ = initial_meta_params(config_, models::init_params(model_.backbone, seed));
  store_ = GradShareState::create(config_.inner_steps, model_.layout.total_dim(), config_.momentum_init,
                                  config_.gate_init);
}

MetaLearner::MetaLearner(MetaConfig config, models::Backbone backbone, MetaParams params, GradShareState state)
    : config_(std::move(config)),
      model_(ModelSpec::from(backbone)),
      params_(std::move(params)),
      store_(std::move(state)),
      adam_(config_.outer) {
  config_.validate();
}

MetaGradient MetaLearner::train_iteration(std::span<const tasks::Task> batch) {
  GradShareState next = store_;
  auto g = meta_gradient(model_, config_, params_, batch, next);
  outer_step(config_, params_, g, adam_);
  store_ = std::move(next);
  return g;
}

GradShareState MetaLearner::state() const {
  GradShareState s = store_;
  s.momentum = params_.momentum;
  s.gate = params_.gate;
  return s;
}

}  // namespace gradshare::meta
