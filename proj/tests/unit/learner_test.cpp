#include <gtest/gtest.h>

#include <cmath>

#include "gradshare/harness/oracle_cases.hpp"
#include "gradshare/meta/train.hpp"
#include "gradshare/oracle/finite_diff.hpp"
#include "gradshare/oracle/reference_maml.hpp"

using namespace gradshare;

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct Small {
  tasks::TaskDistribution dist;
  models::Backbone backbone{{16, 12, 5}, models::Activation::Relu, models::OutputKind::Classification};
  meta::ModelSpec model = meta::ModelSpec::from(backbone);
};

}  // namespace

TEST(InnerAdapt, OneStepWithoutSharingIsPlainGradientDescent) {
  Small s;
  meta::MetaConfig c;
  c.grad_share = false;
  c.inner_steps = 1;
  c.task_batch = 1;
  const auto params = meta::initial_meta_params(c, models::init_params(s.backbone, 1));
  const auto batch = tasks::sample_batch(s.dist, 1, 2);
  auto state = meta::GradShareState::create(1, s.model.layout.total_dim());
  const auto r = meta::inner_adapt(s.model, c, meta::OuterLeaves::from(params), batch, state);

  const auto net = harness::to_reference(s.backbone);
  const auto g = oracle::ref_gradient(net, params.theta, harness::to_reference(batch[0]).support);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r.adapted[0].value()[i], params.theta[i] - 0.1 * g[i], 1e-15);
  EXPECT_EQ(state, meta::GradShareState::create(1, s.model.layout.total_dim()));
}

TEST(InnerAdapt, SingleTaskSharesItsOwnNormalizedGradient) {
  Small s;
  meta::MetaConfig c;
  c.inner_steps = 2;
  c.task_batch = 1;
  const auto params = meta::initial_meta_params(c, models::init_params(s.backbone, 1));
  const auto batch = tasks::sample_batch(s.dist, 1, 3);
  auto state = meta::GradShareState::create(2, s.model.layout.total_dim());
  const auto r = meta::inner_adapt(s.model, c, meta::OuterLeaves::from(params), batch, state);

  const auto net = harness::to_reference(s.backbone);
  auto g = oracle::ref_gradient(net, params.theta, harness::to_reference(batch[0]).support);
  const double n = norm(g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r.shared[0][i], g[i] / (n + 1e-12), 1e-14);
  EXPECT_NEAR(norm(r.shared[1]), 1.0, 1e-9);
  EXPECT_TRUE(state.initialized());
  EXPECT_EQ(state.running_mean[0], r.shared[0]);
}

TEST(InnerAdapt, StoreMustMatchShape) {
  Small s;
  meta::MetaConfig c;
  const auto params = meta::initial_meta_params(c, models::init_params(s.backbone, 1));
  auto state = meta::GradShareState::create(3, s.model.layout.total_dim());
  const auto batch = tasks::sample_batch(s.dist, 2, 3);
  EXPECT_THROW(meta::inner_adapt(s.model, c, meta::OuterLeaves::from(params), batch, state), std::invalid_argument);
  const std::vector<tasks::Task> none;
  EXPECT_THROW(meta::inner_adapt(s.model, c, meta::OuterLeaves::from(params), none, state), std::invalid_argument);
}

TEST(MetaGradient, FullFlowMatchesFiniteDifferences) {
  for (auto [k, t] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 2}, {3, 3}, {3, 2}}) {
    const auto c = harness::check_meta_gradient(harness::toy_problem(meta::Learner::Maml, false, k, t, 40 + k));
    EXPECT_LE(c.max(), 1e-3) << "K=" << k << " T=" << t << " theta " << c.theta << " m " << c.momentum << " lambda "
                             << c.gate;
  }
}

TEST(MetaGradient, DetachedMatchesFrozenFiniteDifferences) {
  for (auto [k, t] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 3}}) {
    const auto c = harness::check_meta_gradient(harness::toy_problem(meta::Learner::Maml, true, k, t, 50 + k));
    EXPECT_LE(c.max(), 1e-3) << "K=" << k << " T=" << t;
  }
}

TEST(MetaGradient, MetaSgdIncludesStepSizes) {
  for (bool detach : {false, true}) {
    const auto p = harness::toy_problem(meta::Learner::MetaSgd, detach, 2, 3, 61);
    const auto c = harness::check_meta_gradient(p);
    EXPECT_LE(c.max(), 1e-3);
    EXPECT_GT(c.inner_lr, 0.0);
  }
}

TEST(MetaGradient, DetachChangesOnlyTheThetaPath) {
  auto full = harness::toy_problem(meta::Learner::Maml, false, 2, 3, 70);
  auto cut = full;
  cut.config.detach_shared_gradient = true;
  auto s1 = full.state, s2 = cut.state;
  const auto a = meta::meta_gradient(full.model, full.config, full.params, full.batch, s1);
  const auto b = meta::meta_gradient(cut.model, cut.config, cut.params, cut.batch, s2);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(s1, s2);
  EXPECT_GT(oracle::relative_error(a.grad.theta, b.grad.theta), 1e-6);
}

TEST(MetaGradient, PinnedZeroGateCutsMomentumPath) {
  auto p = harness::toy_problem(meta::Learner::Maml, false, 3, 2, 80);
  p.config.gate_weight_override = 0.0;
  auto s = p.state;
  const auto g = meta::meta_gradient(p.model, p.config, p.params, p.batch, s);
  for (double v : g.grad.momentum) EXPECT_EQ(v, 0.0);
  for (double v : g.grad.gate) EXPECT_EQ(v, 0.0);
}

TEST(OuterStep, WithoutSharingMatchesReferenceMaml) {
  EXPECT_LE(harness::reference_trajectory_gap(meta::Learner::Maml, 3, 8), 1e-12);
  EXPECT_LE(harness::reference_trajectory_gap(meta::Learner::MetaSgd, 3, 8), 1e-12);
}

TEST(OuterStep, NonFiniteGradientNamesParameter) {
  meta::MetaConfig c;
  auto p = harness::toy_problem(meta::Learner::Maml, false, 2, 2, 3);
  meta::MetaGradient g;
  g.grad = p.params;
  g.grad.gate[1] = std::nan("");
  const auto before = p.params;
  meta::Adam adam(c.outer);
  try {
    meta::outer_step(p.config, p.params, g, adam);
    FAIL() << "expected NumericalError";
  } catch (const meta::NumericalError& e) {
    EXPECT_EQ(e.name(), "gate");
    EXPECT_NE(std::string(e.what()).find("gate"), std::string::npos);
  }
  EXPECT_EQ(p.params, before);
}

TEST(MetaLearner, StartsWithHalfGatesAndSeedsStoreOnFirstBatch) {
  Small s;
  meta::MetaConfig c;
  c.inner_steps = 3;
  meta::MetaLearner learner(c, s.backbone, 4);
  EXPECT_EQ(learner.state().mean_sigma_momentum(), 0.5);
  EXPECT_EQ(learner.state().mean_sigma_gate(), 0.5);
  EXPECT_FALSE(learner.state().initialized());
  learner.train_iteration(tasks::sample_batch(s.dist, 5, 4));
  EXPECT_TRUE(learner.state().initialized());
  EXPECT_NE(learner.state().mean_sigma_gate(), 0.5);
  EXPECT_EQ(learner.state().gate, learner.params().gate);
}

TEST(MetaLearner, PinnedGatesStayAtInitialLogits) {
  Small s;
  meta::MetaConfig c;
  c.inner_steps = 2;
  c.train_gates = false;
  c.gate_init = 2.0;
  meta::MetaLearner learner(c, s.backbone, 4);
  for (std::uint64_t i = 0; i < 3; ++i) learner.train_iteration(tasks::sample_batch(s.dist, 5, 4, 5 * i));
  EXPECT_EQ(learner.params().gate, (std::vector<double>{2.0, 2.0}));
  EXPECT_EQ(learner.params().momentum, (std::vector<double>{0.0, 0.0}));
}

TEST(MetaLearner, SharedGradientNormInvariants) {
  Small s;
  meta::MetaConfig c;
  c.inner_steps = 3;
  meta::MetaLearner learner(c, s.backbone, 6);
  for (std::uint64_t i = 0; i < 40; ++i) {
    const auto batch = tasks::sample_batch(s.dist, 5, 6, 5 * i);
    auto probe = learner.state();
    const auto r = meta::inner_adapt(learner.model(), c, meta::OuterLeaves::from(learner.params()), batch, probe);
    for (const auto& g : r.shared) EXPECT_NEAR(norm(g), 1.0, 1e-9);
    learner.train_iteration(batch);
    EXPECT_EQ(learner.state().running_mean, probe.running_mean);
    for (const auto& gh : learner.state().running_mean) EXPECT_LE(norm(gh), 1.0 + 1e-9);
  }
}

TEST(MetaLearner, RejectsInvalidConfig) {
  Small s;
  meta::MetaConfig c;
  c.inner_steps = 0;
  EXPECT_THROW(meta::MetaLearner(c, s.backbone, 1), std::invalid_argument);
  c.inner_steps = 1;
  c.inner_lr = -1.0;
  EXPECT_THROW(meta::MetaLearner(c, s.backbone, 1), std::invalid_argument);
}

namespace {

meta::TrainOptions tiny_options(std::uint64_t seed) {
  meta::TrainOptions o;
  o.seed = seed;
  auto val = o.train_tasks;
  val.split = tasks::Split::MetaVal;
  o.val_episodes = tasks::sample_batch(val, 20, 99);
  return o;
}

meta::MetaConfig tiny_config() {
  meta::MetaConfig c;
  c.epochs = 4;
  c.iterations_per_epoch = 3;
  c.inner_steps = 2;
  c.task_batch = 2;
  c.top_n = 2;
  return c;
}

}  // namespace

TEST(MetaTrain, SameSeedSameHistory) {
  Small s;
  const auto a = meta::meta_train(tiny_config(), s.backbone, tiny_options(5));
  const auto b = meta::meta_train(tiny_config(), s.backbone, tiny_options(5));
  ASSERT_EQ(a.history.size(), 4u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train.loss_mean, b.history[i].train.loss_mean);
    EXPECT_EQ(a.history[i].val.accuracy.mean, b.history[i].val.accuracy.mean);
    EXPECT_EQ(a.history[i].sigma_gate_mean, b.history[i].sigma_gate_mean);
  }
  EXPECT_EQ(a.final_state, b.final_state);
  const auto c = meta::meta_train(tiny_config(), s.backbone, tiny_options(6));
  EXPECT_NE(a.final_state.theta, c.final_state.theta);
}

TEST(MetaTrain, KeepsTopCheckpointsByScore) {
  Small s;
  const auto r = meta::meta_train(tiny_config(), s.backbone, tiny_options(5));
  ASSERT_EQ(r.top.size(), 2u);
  EXPECT_GE(r.top[0].val_score, r.top[1].val_score);
  double best = -INFINITY;
  std::uint32_t best_epoch = 0;
  for (const auto& h : r.history) {
    if (h.val.score() > best) best = h.val.score(), best_epoch = h.epoch;
  }
  EXPECT_EQ(r.top[0].epoch, best_epoch);
  EXPECT_EQ(r.top[0].val_score, best);
  EXPECT_TRUE(r.top[0].state.initialized());
}

TEST(MetaTrain, ValidationLeavesStoreUntouched) {
  Small s;
  std::vector<meta::GradShareState> seen;
  auto o = tiny_options(5);
  o.on_epoch = [&](const meta::EpochRecord&, const meta::MetaLearner& l, bool) { seen.push_back(l.state()); };
  const auto r = meta::meta_train(tiny_config(), s.backbone, o);
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_EQ(seen.back(), r.final_state.state);
  const auto before = r.final_state.state;
  (void)meta::meta_test(r.final_state, o.val_episodes);
  EXPECT_EQ(r.final_state.state, before);
}

TEST(MetaTrain, DivergenceAbortsWithDiagnostic) {
  models::Backbone b{{1, 20, 1}, models::Activation::Relu, models::OutputKind::Regression};
  auto c = tiny_config();
  c.inner_lr = 1e6;
  c.inner_steps = 5;
  meta::TrainOptions o;
  o.seed = 1;
  o.train_tasks.family = tasks::Family::Sinusoid;
  auto val = o.train_tasks;
  val.split = tasks::Split::MetaVal;
  o.val_episodes = tasks::sample_batch(val, 5, 1);
  try {
    meta::meta_train(c, b, o);
    FAIL() << "expected NumericalAbort";
  } catch (const meta::NumericalAbort& e) {
    EXPECT_EQ(e.diagnostic().epoch, 1u);
    EXPECT_GE(e.diagnostic().iteration, 1u);
    EXPECT_FALSE(e.diagnostic().quantity.empty());
    EXPECT_TRUE(std::isfinite(e.diagnostic().theta_norm));
  }
}
