#include "gradshare/meta/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gradshare/util/rng.hpp"

namespace gradshare::meta {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

AbortDiagnostic diagnose(const MetaLearner& learner, std::uint32_t epoch, std::uint64_t iteration,
                         const std::string& quantity, const std::string& message) {
  AbortDiagnostic d;
  d.epoch = epoch;
  d.iteration = iteration;
  d.quantity = quantity;
  d.message = message;
  d.theta_norm = norm(learner.params().theta);
  d.inner_lr_norm = norm(learner.params().inner_lr);
  d.momentum_norm = norm(learner.params().momentum);
  d.gate_norm = norm(learner.params().gate);
  return d;
}

}  // namespace

NumericalAbort::NumericalAbort(AbortDiagnostic d)
    : std::runtime_error("numerical abort at epoch " + std::to_string(d.epoch) + ", iteration " +
                         std::to_string(d.iteration) + ": " + d.message),
      diag_(std::move(d)) {}

std::uint64_t init_seed(std::uint64_t run_seed) noexcept { return util::derive_key({run_seed, 0x696E6974ULL}); }

TrainResult meta_train(const MetaConfig& config, const models::Backbone& backbone, const TrainOptions& options) {
  config.validate();
  options.train_tasks.validate();
  if (options.val_episodes.empty()) throw std::invalid_argument("meta_train: no meta-validation episodes");

  MetaLearner learner(config, backbone, init_seed(options.seed));
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  std::uint64_t global_iteration = 0;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<double> losses, accs;
    for (std::uint64_t it = 1; it <= config.iterations_per_epoch; ++it, ++global_iteration) {
      const auto batch =
          tasks::sample_batch(options.train_tasks, config.task_batch, options.seed, global_iteration * config.task_batch);
      MetaGradient g;
      try {
        g = learner.train_iteration(batch);
      } catch (const NumericalError& e) {
        throw NumericalAbort(diagnose(learner, epoch, it, e.name(), e.what()));
      }
      losses.push_back(g.loss);
      accs.push_back(g.accuracy);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const auto tl = util::mean_ci95(losses);
    const auto ta = util::mean_ci95(accs);
    rec.train = {tl.mean, tl.half_width, ta.mean, ta.half_width};
    const auto state = learner.state();
    rec.val = evaluate(learner.model(), config, learner.params(), state, options.val_episodes);
    if (!std::isfinite(rec.val.loss.mean)) {
      throw NumericalAbort(
          diagnose(learner, epoch, config.iterations_per_epoch, "val_loss", "non-finite meta-validation loss"));
    }
    rec.sigma_momentum_mean = state.mean_sigma_momentum();
    rec.sigma_gate_mean = state.mean_sigma_gate();
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // Top-N by score; a tie never displaces an earlier epoch.
    const double score = rec.val.score();
    auto pos = std::find_if(result.top.begin(), result.top.end(),
                            [score](const Checkpoint& c) { return score > c.val_score; });
    bool retained = false;
    if (static_cast<std::size_t>(pos - result.top.begin()) < config.top_n) {
      result.top.insert(pos, make_checkpoint(learner, epoch, score));
      if (result.top.size() > config.top_n) result.top.pop_back();
      retained = true;
    }
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec, learner, retained);
  }
  result.final_state = make_checkpoint(learner, config.epochs,
                                       result.history.empty() ? 0.0 : result.history.back().val.score());
  return result;
}

}  // namespace gradshare::meta
