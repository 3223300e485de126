#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gradshare/meta/checkpoint.hpp"
#include "gradshare/util/binary_io.hpp"

using namespace gradshare;

namespace {

meta::Checkpoint trained(meta::Learner learner, bool grad_share, std::size_t iterations = 3) {
  meta::MetaConfig c;
  c.learner = learner;
  c.grad_share = grad_share;
  c.inner_steps = 3;
  c.task_batch = 3;
  models::Backbone b{{16, 10, 5}, models::Activation::Relu, models::OutputKind::Classification};
  meta::MetaLearner l(c, b, 2);
  tasks::TaskDistribution d;
  for (std::uint64_t i = 0; i < iterations; ++i) l.train_iteration(tasks::sample_batch(d, 3, 2, 3 * i));
  return meta::make_checkpoint(l, 7, 0.42);
}

std::vector<tasks::Task> val_tasks(std::size_t n) {
  tasks::TaskDistribution d;
  d.split = tasks::Split::MetaVal;
  return tasks::sample_batch(d, n, 11);
}

}  // namespace

TEST(Checkpoint, RoundTrip) {
  for (auto learner : {meta::Learner::Maml, meta::Learner::MetaSgd}) {
    for (bool gs : {true, false}) {
      const auto c = trained(learner, gs);
      const auto back = meta::decode_checkpoint(meta::encode_checkpoint(c));
      EXPECT_EQ(back, c);
    }
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto c = trained(meta::Learner::Maml, true);
  const auto path = (std::filesystem::temp_directory_path() / "gradshare_ckpt_test.gsck").string();
  meta::write_checkpoint(path, c);
  EXPECT_EQ(meta::read_checkpoint(path), c);
  std::filesystem::remove(path);
}

TEST(Checkpoint, HoldsRunningMeansForAllSteps) {
  const auto c = trained(meta::Learner::Maml, true, 1);
  EXPECT_EQ(c.state.steps(), 3u);
  EXPECT_TRUE(c.state.initialized());
  EXPECT_EQ(c.state.dim(), c.theta.total_dim());
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto good = meta::encode_checkpoint(trained(meta::Learner::Maml, true));
  auto bad = good;
  bad[1] = 'X';
  EXPECT_THROW(meta::decode_checkpoint(bad), util::FormatError);
  bad = good;
  bad[6] ^= 0xFF;  // digest
  EXPECT_THROW(meta::decode_checkpoint(bad), util::FormatError);
  bad = good;
  bad.resize(bad.size() / 2);
  EXPECT_THROW(meta::decode_checkpoint(bad), util::FormatError);
  bad = good;
  bad.push_back(1);
  EXPECT_THROW(meta::decode_checkpoint(bad), util::FormatError);
}

TEST(MetaTest, RepeatIsBitIdenticalAndPure) {
  const auto c = trained(meta::Learner::Maml, true);
  const auto tasks = val_tasks(30);
  const auto before = meta::encode_checkpoint(c);
  const auto a = meta::meta_test(c, tasks);
  const auto b = meta::meta_test(c, tasks);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a.accuracy.mean), std::bit_cast<std::uint64_t>(b.accuracy.mean));
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a.loss.mean), std::bit_cast<std::uint64_t>(b.loss.mean));
  EXPECT_EQ(meta::encode_checkpoint(c), before);
}

TEST(MetaTest, MissingRunningMeanIsAnError) {
  auto c = trained(meta::Learner::Maml, true);
  c.state.step_initialized[2] = 0;
  EXPECT_THROW(meta::meta_test(c, val_tasks(2)), std::invalid_argument);
  const auto back = meta::decode_checkpoint(meta::encode_checkpoint(c));
  EXPECT_THROW(meta::meta_test(back, val_tasks(2)), std::invalid_argument);
}

TEST(MetaTest, ConfidenceIntervalOverSixHundredTasks) {
  const auto c = trained(meta::Learner::Maml, true);
  const auto tasks = val_tasks(600);
  const auto s = meta::meta_test(c, tasks);
  ASSERT_EQ(s.accuracy.count, 600u);
  std::vector<double> acc;
  for (const auto& t : tasks) acc.push_back(meta::evaluate_task(c.model(), c.config, c.meta_params(), c.state, t).accuracy);
  double mean = 0.0;
  for (double a : acc) mean += a / 600.0;
  double var = 0.0;
  for (double a : acc) var += (a - mean) * (a - mean) / 599.0;
  EXPECT_NEAR(s.accuracy.mean, mean, 1e-12);
  EXPECT_NEAR(s.accuracy.half_width, 1.96 * std::sqrt(var) / std::sqrt(600.0), 1e-12);
}

TEST(MetaTest, SeparableTasksAreSolvedAfterAdaptation) {
  meta::MetaConfig c;
  c.grad_share = false;
  c.inner_steps = 20;
  c.inner_lr = 1.0;
  models::Backbone b{{16, 32, 5}, models::Activation::Relu, models::OutputKind::Classification};
  meta::MetaLearner l(c, b, 3);
  const auto ckpt = meta::make_checkpoint(l, 0, 0.0);
  tasks::TaskDistribution d;
  d.gaussian.noise = 0.0;
  d.split = tasks::Split::MetaTest;
  const auto s = meta::meta_test(ckpt, tasks::sample_batch(d, 20, 5));
  EXPECT_EQ(s.accuracy.mean, 1.0);
}

TEST(MetaTest, RegressionScoresNegativeLoss) {
  meta::MetaConfig c;
  c.inner_steps = 2;
  meta::MetaLearner l(c, models::sinusoid_backbone(), 1);
  tasks::TaskDistribution d;
  d.family = tasks::Family::Sinusoid;
  d.shot = 10;
  d.query = 10;
  l.train_iteration(tasks::sample_batch(d, 5, 1));
  const auto ckpt = meta::make_checkpoint(l, 1, 0.0);
  d.split = tasks::Split::MetaVal;
  const auto s = meta::meta_test(ckpt, tasks::sample_batch(d, 10, 2));
  EXPECT_FALSE(s.classification);
  EXPECT_GT(s.loss.mean, 0.0);
  EXPECT_EQ(s.score(), -s.loss.mean);
}
