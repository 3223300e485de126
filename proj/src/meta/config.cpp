#include "gradshare/meta/config.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gradshare::meta {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t positive(util::KeyValueFile& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 1) throw util::ConfigError(key, "key '" + key + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string_view to_string(Learner l) noexcept { return l == Learner::Maml ? "maml" : "meta-sgd"; }

Learner parse_learner(std::string_view s) {
  if (s == "maml") return Learner::Maml;
  if (s == "meta-sgd") return Learner::MetaSgd;
  throw std::invalid_argument("unknown learner '" + std::string(s) + "' (expected maml or meta-sgd)");
}

void MetaConfig::validate() const {
  if (inner_steps < 1) throw std::invalid_argument("inner_steps (K) must be at least 1");
  if (task_batch < 1) throw std::invalid_argument("task_batch (T) must be at least 1");
  if (!(inner_lr > 0.0)) throw std::invalid_argument("inner_lr must be positive");
  if (!(outer.lr > 0.0)) throw std::invalid_argument("outer_lr must be positive");
  if (iterations_per_epoch < 1 || epochs < 1) throw std::invalid_argument("schedule must have at least one iteration");
  if (!(eps_norm > 0.0)) throw std::invalid_argument("eps_norm must be positive");
  if (top_n < 1) throw std::invalid_argument("top_n must be at least 1");
}

MetaConfig read_meta_config(util::KeyValueFile& kv, const MetaConfig& d) {
  MetaConfig c = d;
  try {
    c.learner = parse_learner(kv.get_string("learner", std::string(to_string(d.learner))));
  } catch (const std::invalid_argument& e) {
    throw util::ConfigError("learner", e.what());
  }
  c.grad_share = kv.get_bool("grad_share", d.grad_share);
  c.inner_steps = positive(kv, "inner_steps", d.inner_steps);
  c.task_batch = positive(kv, "task_batch", d.task_batch);
  c.inner_lr = kv.get_double("inner_lr", d.inner_lr);
  c.outer.lr = kv.get_double("outer_lr", d.outer.lr);
  c.outer.beta1 = kv.get_double("adam_beta1", d.outer.beta1);
  c.outer.beta2 = kv.get_double("adam_beta2", d.outer.beta2);
  c.outer.eps = kv.get_double("adam_eps", d.outer.eps);
  c.iterations_per_epoch = positive(kv, "iterations_per_epoch", d.iterations_per_epoch);
  c.epochs = positive(kv, "epochs", d.epochs);
  c.detach_shared_gradient = kv.get_bool("detach_shared_gradient", d.detach_shared_gradient);
  c.eps_norm = kv.get_double("eps_norm", d.eps_norm);
  c.momentum_init = kv.get_double("momentum_init", d.momentum_init);
  c.gate_init = kv.get_double("gate_init", d.gate_init);
  c.train_gates = kv.get_bool("train_gates", d.train_gates);
  const auto override_text = kv.get_string("gate_weight_override", "none");
  if (override_text == "none") {
    c.gate_weight_override = d.gate_weight_override;
  } else {
    try {
      c.gate_weight_override = std::stod(override_text);
    } catch (const std::exception&) {
      throw util::ConfigError("gate_weight_override", "key 'gate_weight_override': expected a number or none");
    }
  }
  c.top_n = positive(kv, "top_n", d.top_n);
  if (!(c.inner_lr > 0.0)) throw util::ConfigError("inner_lr", "key 'inner_lr' must be positive");
  if (!(c.outer.lr > 0.0)) throw util::ConfigError("outer_lr", "key 'outer_lr' must be positive");
  if (!(c.eps_norm > 0.0)) throw util::ConfigError("eps_norm", "key 'eps_norm' must be positive");
  return c;
}

models::Backbone read_backbone(util::KeyValueFile& kv, const models::Backbone& defaults) {
  models::Backbone b = defaults;
  std::vector<std::int64_t> fallback(defaults.layer_sizes.begin(), defaults.layer_sizes.end());
  auto sizes = kv.get_int_list("layer_sizes", fallback);
  b.layer_sizes.clear();
  for (auto s : sizes) {
    if (s < 1) throw util::ConfigError("layer_sizes", "key 'layer_sizes': widths must be positive");
    b.layer_sizes.push_back(static_cast<std::size_t>(s));
  }
  try {
    b.activation = models::parse_activation(kv.get_string("activation", std::string(to_string(defaults.activation))));
  } catch (const std::invalid_argument& e) {
    throw util::ConfigError("activation", e.what());
  }
  const auto out = kv.get_string("output", defaults.output == models::OutputKind::Regression ? "regression"
                                                                                             : "classification");
  if (out == "regression") {
    b.output = models::OutputKind::Regression;
  } else if (out == "classification") {
    b.output = models::OutputKind::Classification;
  } else {
    throw util::ConfigError("output", "key 'output': expected regression or classification");
  }
  return b;
}

std::string describe_model(const MetaConfig& c, const models::Backbone& b) {
  std::ostringstream out;
  out << "learner = " << to_string(c.learner) << '\n';
  out << "grad_share = " << (c.grad_share ? "true" : "false") << '\n';
  out << "inner_steps = " << c.inner_steps << '\n';
  out << "task_batch = " << c.task_batch << '\n';
  out << "inner_lr = " << format_double(c.inner_lr) << '\n';
  out << "outer_lr = " << format_double(c.outer.lr) << '\n';
  out << "adam_beta1 = " << format_double(c.outer.beta1) << '\n';
  out << "adam_beta2 = " << format_double(c.outer.beta2) << '\n';
  out << "adam_eps = " << format_double(c.outer.eps) << '\n';
  out << "iterations_per_epoch = " << c.iterations_per_epoch << '\n';
  out << "epochs = " << c.epochs << '\n';
  out << "detach_shared_gradient = " << (c.detach_shared_gradient ? "true" : "false") << '\n';
  out << "eps_norm = " << format_double(c.eps_norm) << '\n';
  out << "momentum_init = " << format_double(c.momentum_init) << '\n';
  out << "gate_init = " << format_double(c.gate_init) << '\n';
  out << "train_gates = " << (c.train_gates ? "true" : "false") << '\n';
  out << "gate_weight_override = "
      << (c.gate_weight_override ? format_double(*c.gate_weight_override) : std::string("none")) << '\n';
  out << "top_n = " << c.top_n << '\n';
  out << "layer_sizes = ";
  for (std::size_t i = 0; i < b.layer_sizes.size(); ++i) out << (i ? "," : "") << b.layer_sizes[i];
  out << '\n';
  out << "activation = " << to_string(b.activation) << '\n';
  out << "output = " << (b.output == models::OutputKind::Regression ? "regression" : "classification") << '\n';
  return out.str();
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace gradshare::meta
