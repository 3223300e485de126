#include "gradshare/harness/experiment_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gradshare/util/key_value.hpp"

namespace gradshare::harness {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t count_key(util::KeyValueFile& kv, const std::string& key, std::size_t fallback, std::int64_t min) {
  const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < min) throw util::ConfigError(key, "key '" + key + "' must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

models::Backbone ExperimentConfig::backbone() const {
  models::Backbone b;
  b.layer_sizes.push_back(tasks.input_dim());
  b.layer_sizes.insert(b.layer_sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  b.layer_sizes.push_back(tasks.output_dim());
  b.activation = activation;
  b.output = tasks.family == tasks::Family::Sinusoid ? models::OutputKind::Regression
                                                     : models::OutputKind::Classification;
  return b;
}

tasks::TaskDistribution ExperimentConfig::split(tasks::Split s) const {
  auto d = tasks;
  d.split = s;
  return d;
}

void ExperimentConfig::validate() const {
  meta.validate();
  tasks.validate();
  backbone().validate();
  if (val_episodes < 1 && val_episodes_file.empty()) throw std::invalid_argument("val_episodes must be at least 1");
}

ExperimentConfig desk_defaults(tasks::Family family) {
  ExperimentConfig c;
  c.meta.epochs = 30;
  c.meta.iterations_per_epoch = 100;
  c.tasks.family = family;
  if (family == tasks::Family::Sinusoid) {
    c.tasks.shot = 10;
    c.tasks.query = 10;
    c.hidden_sizes = {40, 40};
  }
  return c;
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::string& source) {
  auto kv = util::KeyValueFile::parse(text, source);
  tasks::Family family;
  try {
    family = tasks::parse_family(kv.get_string("family", "gaussian-classes"));
  } catch (const std::invalid_argument& e) {
    throw util::ConfigError("family", e.what());
  }
  ExperimentConfig c = desk_defaults(family);
  c.meta = meta::read_meta_config(kv, c.meta);

  auto& t = c.tasks;
  t.way = count_key(kv, "way", t.way, 1);
  t.shot = count_key(kv, "shot", t.shot, 1);
  t.query = count_key(kv, "query", t.query, 1);
  auto& g = t.gaussian;
  g.input_dim = count_key(kv, "input_dim", g.input_dim, 1);
  g.prototype_norm = kv.get_double("prototype_norm", g.prototype_norm);
  g.noise = kv.get_double("noise", g.noise);
  g.train_classes = count_key(kv, "train_classes", g.train_classes, 1);
  g.val_classes = count_key(kv, "val_classes", g.val_classes, 1);
  g.test_classes = count_key(kv, "test_classes", g.test_classes, 1);
  g.examples_per_class = count_key(kv, "examples_per_class", g.examples_per_class, 1);
  g.world_seed = static_cast<std::uint64_t>(kv.get_int("world_seed", static_cast<std::int64_t>(g.world_seed)));
  auto& s = t.sinusoid;
  s.amplitude_min = kv.get_double("amplitude_min", s.amplitude_min);
  s.amplitude_max = kv.get_double("amplitude_max", s.amplitude_max);
  s.phase_min = kv.get_double("phase_min", s.phase_min);
  s.phase_max = kv.get_double("phase_max", s.phase_max);
  s.x_min = kv.get_double("x_min", s.x_min);
  s.x_max = kv.get_double("x_max", s.x_max);
  s.max_points = count_key(kv, "max_points", s.max_points, 1);

  std::vector<std::int64_t> hidden(c.hidden_sizes.begin(), c.hidden_sizes.end());
  hidden = kv.get_int_list("hidden_sizes", hidden);
  c.hidden_sizes.clear();
  for (auto h : hidden) {
    if (h < 1) throw util::ConfigError("hidden_sizes", "key 'hidden_sizes': widths must be positive");
    c.hidden_sizes.push_back(static_cast<std::size_t>(h));
  }
  if (c.hidden_sizes.empty()) throw util::ConfigError("hidden_sizes", "key 'hidden_sizes': need at least one layer");
  try {
    c.activation = models::parse_activation(kv.get_string("activation", std::string(to_string(c.activation))));
  } catch (const std::invalid_argument& e) {
    throw util::ConfigError("activation", e.what());
  }
  c.val_episodes = count_key(kv, "val_episodes", c.val_episodes, 1);
  c.val_seed = static_cast<std::uint64_t>(kv.get_int("val_seed", static_cast<std::int64_t>(c.val_seed)));
  c.val_episodes_file = kv.get_string("val_episodes_file", c.val_episodes_file);
  kv.reject_unknown();

  try {
    c.validate();
  } catch (const util::ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw util::ConfigError("", std::string(source) + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw util::ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), path);
}

std::string describe_experiment(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& t = c.tasks;
  out << "family = " << tasks::to_string(t.family) << '\n';
  out << "way = " << t.way << '\n';
  out << "shot = " << t.shot << '\n';
  out << "query = " << t.query << '\n';
  if (t.family == tasks::Family::GaussianClasses) {
    const auto& g = t.gaussian;
    out << "input_dim = " << g.input_dim << '\n';
    out << "prototype_norm = " << num(g.prototype_norm) << '\n';
    out << "noise = " << num(g.noise) << '\n';
    out << "train_classes = " << g.train_classes << '\n';
    out << "val_classes = " << g.val_classes << '\n';
    out << "test_classes = " << g.test_classes << '\n';
    out << "examples_per_class = " << g.examples_per_class << '\n';
    out << "world_seed = " << g.world_seed << '\n';
  } else {
    const auto& s = t.sinusoid;
    out << "amplitude_min = " << num(s.amplitude_min) << '\n';
    out << "amplitude_max = " << num(s.amplitude_max) << '\n';
    out << "phase_min = " << num(s.phase_min) << '\n';
    out << "phase_max = " << num(s.phase_max) << '\n';
    out << "x_min = " << num(s.x_min) << '\n';
    out << "x_max = " << num(s.x_max) << '\n';
    out << "max_points = " << s.max_points << '\n';
  }
  out << "hidden_sizes = " << join(c.hidden_sizes) << '\n';
  out << "activation = " << models::to_string(c.activation) << '\n';
  out << "val_episodes = " << c.val_episodes << '\n';
  out << "val_seed = " << c.val_seed << '\n';
  if (!c.val_episodes_file.empty()) out << "val_episodes_file = " << c.val_episodes_file << '\n';

  // The meta keys come from the engine's own canonical form, minus the backbone lines.
  std::istringstream meta_lines(meta::describe_model(c.meta, c.backbone()));
  std::string line;
  while (std::getline(meta_lines, line)) {
    if (line.rfind("layer_sizes", 0) == 0 || line.rfind("activation", 0) == 0 || line.rfind("output", 0) == 0) continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace gradshare::harness
