#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gradshare/harness/experiment_config.hpp"
#include "gradshare/harness/metrics.hpp"
#include "gradshare/harness/oracle_cases.hpp"
#include "gradshare/harness/run.hpp"
#include "gradshare/harness/speedup.hpp"
#include "gradshare/meta/checkpoint.hpp"
#include "gradshare/oracle/ema.hpp"
#include "gradshare/tasks/episodes.hpp"
#include "gradshare/util/rng.hpp"

using namespace gradshare;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

harness::ExperimentConfig desk(std::size_t task_batch, bool grad_share, double inner_lr = 0.1) {
  auto c = harness::desk_defaults(tasks::Family::GaussianClasses);
  c.meta.task_batch = task_batch;
  c.meta.grad_share = grad_share;
  c.meta.inner_lr = inner_lr;
  return c;
}

void autodiff_suite() {
  const auto t0 = Clock::now();
  const auto first = harness::run_oracle_case("autodiff-first-order", 1e-4);
  const auto second = harness::run_oracle_case("autodiff-second-order", 1e-3);
  const double secs = seconds_since(t0);
  report(1, first.passed && second.passed && secs <= 60.0,
         fmt("first-order max rel err %.3g (<= 1e-4), second-order max rel err %.3g (<= 1e-3), %.1f s (<= 60 s)",
             first.max_error, second.max_error, secs));
}

void endpoint_reduction() {
  const double maml = harness::reference_trajectory_gap(meta::Learner::Maml, 3, 1);
  const double sgd = harness::reference_trajectory_gap(meta::Learner::MetaSgd, 3, 1);
  report(2, maml <= 1e-12 && sgd <= 1e-12,
         fmt("max |theta - theta_ref| over 3 iterations: maml %.3g, meta-sgd %.3g (<= 1e-12)", maml, sgd));
}

void meta_gradient_oracle() {
  const auto t0 = Clock::now();
  double worst[2] = {0.0, 0.0};
  std::size_t params = 0;
  for (int detach = 0; detach < 2; ++detach) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto p = harness::toy_problem(meta::Learner::Maml, detach != 0, 3, 3, seed);
      params = p.params.theta.size() + p.params.momentum.size() + p.params.gate.size();
      worst[detach] = std::max(worst[detach], harness::check_meta_gradient(p).max());
    }
  }
  const double secs = seconds_since(t0);
  report(3, worst[0] <= 1e-3 && worst[1] <= 1e-3 && secs <= 120.0 && params <= 50,
         fmt("%zu parameters, K=3, T=3: full flow %.3g, detached %.3g (<= 1e-3), %.1f s (<= 120 s)", params, worst[0],
             worst[1], secs));
}

void norm_invariants() {
  const auto c = desk(5, true);
  meta::MetaLearner learner(c.meta, c.backbone(), meta::init_seed(1));
  const auto dist = c.split(tasks::Split::MetaTrain);
  double g_dev = 0.0, ghat_max = 0.0;
  const std::size_t iterations = 300;
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto batch = tasks::sample_batch(dist, c.meta.task_batch, 1, i * c.meta.task_batch);
    auto probe = learner.state();
    const auto r = meta::inner_adapt(learner.model(), c.meta, meta::OuterLeaves::from(learner.params()), batch, probe);
    for (const auto& g : r.shared) g_dev = std::max(g_dev, std::abs(norm(g) - 1.0));
    learner.train_iteration(batch);
    for (const auto& gh : learner.state().running_mean) ghat_max = std::max(ghat_max, norm(gh));
  }

  util::Stream rng{2024, 4};
  double ema_err = 0.0;
  for (std::size_t s = 0; s < 1000; ++s) {
    const std::size_t n = 1 + rng.below(30), dim = 1 + rng.below(8);
    const double logit = rng.uniform(-6.0, 6.0);
    std::vector<std::vector<double>> seq(n, std::vector<double>(dim));
    for (auto& v : seq) {
      for (auto& x : v) x = rng.normal();
      const double nv = norm(v);
      for (auto& x : v) x /= nv;
    }
    const auto closed = oracle::ema_closed_form(seq, logit);
    const double w = meta::sigmoid(logit);
    std::vector<double> ghat = seq[0];
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) {
        for (std::size_t d = 0; d < dim; ++d) ghat[d] = w * seq[j][d] + (1.0 - w) * ghat[d];
      }
      for (std::size_t d = 0; d < dim; ++d) ema_err = std::max(ema_err, std::abs(ghat[d] - closed[j][d]));
    }
  }
  report(4, g_dev <= 1e-9 && ghat_max <= 1.0 + 1e-9 && ema_err <= 1e-12,
         fmt("over %zu iterations max | |g_k| - 1 | %.3g (<= 1e-9), max |g-hat_k| %.12f (<= 1 + 1e-9); EMA vs "
             "closed form over 1000 sequences %.3g (<= 1e-12)",
             iterations, g_dev, ghat_max, ema_err));
}

void zero_shot() {
  const auto r = harness::run_oracle_case("zero-shot-limit", 1e-9);
  report(5, r.passed, fmt("max spread of adapted parameters across the batch %.3g (<= 1e-9)", r.max_error));
}

harness::RunComparison paired(const std::string& root, const std::string& tag, const harness::ExperimentConfig& og,
                              const harness::ExperimentConfig& gs, std::uint64_t seed, bool* finite = nullptr) {
  const auto og_dir = root + "/" + tag + "_og_s" + std::to_string(seed);
  const auto gs_dir = root + "/" + tag + "_gs_s" + std::to_string(seed);
  const auto a = harness::run_experiment(og, seed, og_dir);
  const auto b = harness::run_experiment(gs, seed, gs_dir);
  if (finite) {
    *finite = a.exit_code == 0 && b.exit_code == 0 && b.history.size() == gs.meta.epochs &&
              a.history.size() == og.meta.epochs;
    for (const auto* h : {&a.history, &b.history}) {
      for (const auto& e : *h) *finite = *finite && std::isfinite(e.train.loss_mean) && std::isfinite(e.val.loss.mean);
    }
  }
  const auto ra = harness::read_metrics(harness::RunPaths{og_dir}.metrics()).records;
  const auto rb = harness::read_metrics(harness::RunPaths{gs_dir}.metrics()).records;
  return harness::compute_speedup(ra, rb, og_dir, gs_dir);
}

void acceleration(const std::string& root) {
  const auto t0 = Clock::now();
  std::vector<double> speedups[2];
  std::size_t reached = 0;
  for (int i = 0; i < 2; ++i) {
    const std::size_t t = i == 0 ? 1 : 5;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto c = paired(root, "t" + std::to_string(t), desk(t, false), desk(t, true), seed);
      speedups[i].push_back(c.speedup_percent);
      if (t == 5 && c.gs_reaches_og_peak && *c.gs_reaches_og_peak <= c.epoch_og) ++reached;
      std::printf("  T=%zu seed %llu: baseline peak %.4f at epoch %u, grad-share peak %.4f at epoch %u, speed-up %.1f%%\n",
                  t, static_cast<unsigned long long>(seed), c.peak_og, c.epoch_og, c.peak_gs, c.epoch_gs,
                  c.speedup_percent);
      std::fflush(stdout);
    }
  }
  const double secs = seconds_since(t0);
  const double m1 = median(speedups[0]), m5 = median(speedups[1]);
  report(6, m5 >= 0.0 && m5 >= m1 && secs <= 1800.0,
         fmt("median speed-up T=5 %.1f%% (>= 0), T=1 %.1f%% (T=5 >= T=1); grad-share reached the baseline peak by the "
             "baseline peak epoch in %zu/5 T=5 seeds; %.0f s (<= 1800 s)",
             m5, m1, reached, secs));
}

void big_learning_rate(const std::string& root) {
  bool finite = false;
  const auto c = paired(root, "lr1", desk(5, false, 1.0), desk(5, true, 1.0), 1, &finite);
  report(7, finite,
         fmt("inner lr 1.0: all epochs finite = %s; baseline peak %.4f at epoch %u, grad-share peak %.4f at epoch %u",
             finite ? "yes" : "no", c.peak_og, c.epoch_og, c.peak_gs, c.epoch_gs));
}

void determinism(const std::string& root) {
  auto c = desk(5, true);
  c.meta.epochs = 3;
  c.meta.iterations_per_epoch = 20;
  c.val_episodes = 100;
  const auto a = root + "/det_a", b = root + "/det_b";
  harness::run_experiment(c, 9, a);
  harness::run_experiment(c, 9, b);
  const bool metrics_same = slurp(harness::RunPaths{a}.metrics()) == slurp(harness::RunPaths{b}.metrics());
  const bool ckpt_same =
      slurp(harness::RunPaths{a}.final_checkpoint()) == slurp(harness::RunPaths{b}.final_checkpoint());

  const auto episodes = root + "/det_episodes.bin";
  tasks::write_episodes(episodes, tasks::sample_batch(c.split(tasks::Split::MetaTest), 100, 5));
  const auto ckpt = meta::read_checkpoint(harness::RunPaths{a}.final_checkpoint());
  const auto e1 = meta::meta_test(ckpt, tasks::read_episodes(episodes));
  const auto e2 = meta::meta_test(meta::read_checkpoint(harness::RunPaths{a}.final_checkpoint()),
                                  tasks::read_episodes(episodes));
  const bool stable = std::bit_cast<std::uint64_t>(e1.accuracy.mean) == std::bit_cast<std::uint64_t>(e2.accuracy.mean) &&
                      std::bit_cast<std::uint64_t>(e1.loss.mean) == std::bit_cast<std::uint64_t>(e2.loss.mean) &&
                      std::bit_cast<std::uint64_t>(e1.accuracy.half_width) ==
                          std::bit_cast<std::uint64_t>(e2.accuracy.half_width);
  report(8, metrics_same && ckpt_same && stable,
         fmt("metrics byte-identical %s, final checkpoint byte-identical %s, meta-test bit-stable %s",
             metrics_same ? "yes" : "no", ckpt_same ? "yes" : "no", stable ? "yes" : "no"));
}

std::vector<harness::MetricsRecord> constructed(std::initializer_list<double> accs) {
  std::vector<harness::MetricsRecord> v;
  std::uint32_t e = 0;
  for (double a : accs) {
    harness::MetricsRecord r;
    r.epoch = ++e;
    r.split = std::string(harness::kValSplit);
    r.accuracy_mean = a;
    r.loss_mean = 1.0 - a;
    v.push_back(r);
  }
  return v;
}

void speedup_metric() {
  struct Case {
    std::vector<double> og, gs;
    double expected;
  };
  auto ramp = [](std::size_t peak, std::size_t len, double top) {
    std::vector<double> v;
    for (std::size_t i = 1; i <= len; ++i) v.push_back(i <= peak ? top * double(i) / double(peak) : top - 0.01);
    return v;
  };
  const std::vector<Case> cases{
      {ramp(117, 150, 0.8), ramp(50, 150, 0.8), 134.0},
      {ramp(50, 60, 0.7), ramp(100, 120, 0.7), -50.0},
      {ramp(40, 50, 0.6), ramp(40, 50, 0.65), 0.0},
      {{0.5, 0.7, 0.6, 0.7}, {0.2, 0.9, 0.9, 0.9}, 0.0},
      {{0.1, 0.2, 0.3, 0.3, 0.3, 0.3}, {0.4, 0.3, 0.4}, 200.0},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    std::vector<harness::MetricsRecord> og, gs;
    std::uint32_t e = 0;
    for (double a : c.og) og.push_back(constructed({a})[0]), og.back().epoch = ++e;
    e = 0;
    for (double a : c.gs) gs.push_back(constructed({a})[0]), gs.back().epoch = ++e;
    worst = std::max(worst, std::abs(harness::compute_speedup(og, gs).speedup_percent - c.expected));
  }
  report(9, worst <= 1e-9, fmt("%zu constructed curve pairs incl. ties and negative speed-ups, max |error| %.3g%%",
                               cases.size(), worst));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string root = argc > 1 ? argv[1] : "acceptance_runs";
  fs::create_directories(root);
  autodiff_suite();
  endpoint_reduction();
  meta_gradient_oracle();
  norm_invariants();
  zero_shot();
  acceleration(root);
  big_learning_rate(root);
  determinism(root);
  speedup_metric();
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
