#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gradshare/tasks/task.hpp"
#include "gradshare/util/rng.hpp"

namespace gradshare::tasks {

namespace {

constexpr std::uint64_t kPrototypeTag = 0x70726F746FULL;
constexpr std::uint64_t kTaskTag = 0x7461736BULL;

Task sample_sinusoid(const TaskDistribution& d, util::Stream& rng) {
  const auto& p = d.sinusoid;
  const double amplitude = rng.uniform(p.amplitude_min, p.amplitude_max);
  const double phase = rng.uniform(p.phase_min, p.phase_max);
  auto draw = [&](std::size_t n) {
    Examples ex{ad::Tensor(n, 1), ad::Tensor(n, 1)};
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.uniform(p.x_min, p.x_max);
      ex.inputs[i] = x;
      ex.targets[i] = amplitude * std::sin(x + phase);
    }
    return ex;
  };
  Task t;
  t.loss = LossKind::MeanSquaredError;
  t.way = 0;
  t.support = draw(d.shot);
  t.query = draw(d.query);
  return t;
}

Task sample_gaussian(const TaskDistribution& d, util::Stream& rng) {
  const auto& p = d.gaussian;
  const std::size_t pool = p.classes_in(d.split);

  // Partial Fisher-Yates: the order of the chosen classes is the label assignment.
  std::vector<std::size_t> classes(pool);
  std::iota(classes.begin(), classes.end(), std::size_t{0});
  for (std::size_t i = 0; i < d.way; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool - i));
    std::swap(classes[i], classes[j]);
  }
  std::vector<std::vector<double>> protos;
  for (std::size_t c = 0; c < d.way; ++c) protos.push_back(class_prototype(p, d.split, classes[c]));

  auto draw = [&](std::size_t per_class) {
    const std::size_t n = per_class * d.way;
    Examples ex{ad::Tensor(n, p.input_dim), ad::Tensor(n, 1)};
    std::size_t row = 0;
    for (std::size_t s = 0; s < per_class; ++s) {
      for (std::size_t c = 0; c < d.way; ++c, ++row) {
        for (std::size_t j = 0; j < p.input_dim; ++j) {
          ex.inputs(row, j) = protos[c][j] + (p.noise > 0.0 ? p.noise * rng.normal() : 0.0);
        }
        ex.targets[row] = static_cast<double>(c);
      }
    }
    return ex;
  };
  Task t;
  t.loss = LossKind::CrossEntropy;
  t.way = static_cast<std::uint16_t>(d.way);
  t.support = draw(d.shot);
  t.query = draw(d.query);
  return t;
}

}  // namespace

std::string_view to_string(Family f) noexcept { return f == Family::Sinusoid ? "sinusoid" : "gaussian-classes"; }

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::MetaTrain: return "meta-train";
    case Split::MetaVal: return "meta-val";
    case Split::MetaTest: return "meta-test";
  }
  return "unknown";
}

Family parse_family(std::string_view s) {
  if (s == "sinusoid") return Family::Sinusoid;
  if (s == "gaussian-classes") return Family::GaussianClasses;
  throw std::invalid_argument("unknown task family '" + std::string(s) + "' (expected sinusoid or gaussian-classes)");
}

Split parse_split(std::string_view s) {
  if (s == "meta-train") return Split::MetaTrain;
  if (s == "meta-val") return Split::MetaVal;
  if (s == "meta-test") return Split::MetaTest;
  throw std::invalid_argument("unknown split '" + std::string(s) + "' (expected meta-train, meta-val or meta-test)");
}

std::size_t GaussianClassesParams::classes_in(Split s) const noexcept {
  switch (s) {
    case Split::MetaTrain: return train_classes;
    case Split::MetaVal: return val_classes;
    case Split::MetaTest: return test_classes;
  }
  return 0;
}

LossKind TaskDistribution::loss_kind() const noexcept {
  return family == Family::Sinusoid ? LossKind::MeanSquaredError : LossKind::CrossEntropy;
}

std::size_t TaskDistribution::input_dim() const noexcept {
  return family == Family::Sinusoid ? 1 : gaussian.input_dim;
}

std::size_t TaskDistribution::output_dim() const noexcept { return family == Family::Sinusoid ? 1 : way; }

void TaskDistribution::validate() const {
  if (shot == 0 || query == 0) throw std::invalid_argument("task distribution: shot and query must be positive");
  if (family == Family::Sinusoid) {
    if (shot + query > sinusoid.max_points) {
      throw std::invalid_argument("sinusoid: shot + query = " + std::to_string(shot + query) +
                                  " exceeds capacity " + std::to_string(sinusoid.max_points));
    }
    if (!(sinusoid.amplitude_min <= sinusoid.amplitude_max) || !(sinusoid.x_min <= sinusoid.x_max)) {
      throw std::invalid_argument("sinusoid: empty sampling range");
    }
    return;
  }
  if (way < 2) throw std::invalid_argument("gaussian-classes: way must be at least 2");
  if (way > gaussian.classes_in(split)) {
    throw std::invalid_argument("gaussian-classes: way " + std::to_string(way) + " exceeds the " +
                                std::to_string(gaussian.classes_in(split)) + " classes of split " +
                                std::string(to_string(split)));
  }
  if (shot + query > gaussian.examples_per_class) {
    throw std::invalid_argument("gaussian-classes: shot + query = " + std::to_string(shot + query) +
                                " exceeds per-class capacity " + std::to_string(gaussian.examples_per_class));
  }
  if (gaussian.input_dim == 0) throw std::invalid_argument("gaussian-classes: input_dim must be positive");
  if (gaussian.noise < 0.0) throw std::invalid_argument("gaussian-classes: noise must be non-negative");
}

std::vector<double> class_prototype(const GaussianClassesParams& p, Split split, std::size_t class_index) {
  util::Stream rng{p.world_seed, kPrototypeTag, static_cast<std::uint64_t>(split), class_index};
  std::vector<double> v(p.input_dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-12);
  for (auto& x : v) x *= p.prototype_norm / norm;
  return v;
}

Task sample_task(const TaskDistribution& dist, std::uint64_t seed, std::uint64_t index) {
  dist.validate();
  util::Stream rng{seed, kTaskTag, static_cast<std::uint64_t>(dist.split), index};
  Task t = dist.family == Family::Sinusoid ? sample_sinusoid(dist, rng) : sample_gaussian(dist, rng);
  t.task_id = index;
  return t;
}

std::vector<Task> sample_batch(const TaskDistribution& dist, std::size_t count, std::uint64_t seed,
                               std::uint64_t first_index) {
  if (count < 1) throw std::invalid_argument("sample_batch: batch size must be at least 1");
  std::vector<Task> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_task(dist, seed, first_index + i));
  return out;
}

}  // namespace gradshare::tasks
