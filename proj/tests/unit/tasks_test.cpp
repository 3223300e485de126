#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "gradshare/tasks/episodes.hpp"
#include "gradshare/tasks/task.hpp"
#include "gradshare/util/binary_io.hpp"
#include "gradshare/util/rng.hpp"

using namespace gradshare;
using tasks::Split;

namespace {

std::map<int, int> label_counts(const ad::Tensor& labels) {
  std::map<int, int> counts;
  for (double v : labels.span()) ++counts[static_cast<int>(v)];
  return counts;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gradshare_tasks_" + name)).string();
}

}  // namespace

TEST(GaussianClasses, FiveWayOneShotFifteenQuery) {
  tasks::TaskDistribution d;
  const auto t = tasks::sample_task(d, 1, 0);
  EXPECT_EQ(t.support.size(), 5u);
  EXPECT_EQ(t.query.size(), 75u);
  EXPECT_EQ(t.support.inputs.cols(), 16u);
  EXPECT_EQ(t.way, 5);
  EXPECT_EQ(t.loss, models::LossKind::CrossEntropy);
}

TEST(GaussianClasses, SameSeedSameTask) {
  tasks::TaskDistribution d;
  EXPECT_EQ(tasks::sample_task(d, 3, 17), tasks::sample_task(d, 3, 17));
  EXPECT_NE(tasks::sample_task(d, 3, 17), tasks::sample_task(d, 4, 17));
  EXPECT_NE(tasks::sample_task(d, 3, 17), tasks::sample_task(d, 3, 18));
}

TEST(GaussianClasses, ZeroNoiseNearestPrototypeIsPerfect) {
  tasks::TaskDistribution d;
  d.gaussian.noise = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto t = tasks::sample_task(d, 5, i);
    std::size_t correct = 0;
    for (std::size_t q = 0; q < t.query.size(); ++q) {
      double best = INFINITY;
      double label = -1;
      for (std::size_t s = 0; s < t.support.size(); ++s) {
        double dist = 0.0;
        for (std::size_t j = 0; j < 16; ++j) {
          const double e = t.query.inputs(q, j) - t.support.inputs(s, j);
          dist += e * e;
        }
        if (dist < best) best = dist, label = t.support.targets[s];
      }
      correct += label == t.query.targets[q];
    }
    EXPECT_EQ(correct, t.query.size());
  }
}

TEST(GaussianClasses, ClassBalanceOverManyTasks) {
  tasks::TaskDistribution d;
  util::Stream rng{41};
  for (std::uint64_t i = 0; i < 1000; ++i) {
    d.way = 2 + i % 6;
    d.shot = 1 + i % 5;
    d.query = 1 + i % 15;
    const auto t = tasks::sample_task(d, 9, i);
    ASSERT_EQ(t.support.size(), d.way * d.shot);
    ASSERT_EQ(t.query.size(), d.way * d.query);
    const auto s = label_counts(t.support.targets);
    const auto q = label_counts(t.query.targets);
    ASSERT_EQ(s.size(), d.way);
    ASSERT_EQ(q.size(), d.way);
    for (const auto& [label, n] : s) EXPECT_EQ(n, static_cast<int>(d.shot)) << label;
    for (const auto& [label, n] : q) EXPECT_EQ(n, static_cast<int>(d.query)) << label;
  }
}

TEST(GaussianClasses, SupportAndQueryAreDistinctDraws) {
  tasks::TaskDistribution d;
  const auto t = tasks::sample_task(d, 2, 0);
  for (std::size_t a = 0; a < t.support.size(); ++a)
    for (std::size_t b = 0; b < t.query.size(); ++b) EXPECT_NE(t.support.inputs(a, 0), t.query.inputs(b, 0));
}

TEST(GaussianClasses, SplitsUseDisjointPrototypes) {
  for (std::uint64_t world : {0ull, 1ull, 12345ull}) {
    tasks::GaussianClassesParams p;
    p.world_seed = world;
    std::vector<std::pair<Split, std::vector<double>>> all;
    for (auto split : {Split::MetaTrain, Split::MetaVal, Split::MetaTest}) {
      for (std::size_t c = 0; c < p.classes_in(split); ++c) {
        auto v = tasks::class_prototype(p, split, c);
        double n = 0.0;
        for (double x : v) n += x * x;
        EXPECT_NEAR(std::sqrt(n), p.prototype_norm, 1e-12);
        all.emplace_back(split, std::move(v));
      }
    }
    double closest = INFINITY;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        if (all[i].first == all[j].first) continue;
        double d2 = 0.0;
        for (std::size_t k = 0; k < all[i].second.size(); ++k) {
          const double e = all[i].second[k] - all[j].second[k];
          d2 += e * e;
        }
        closest = std::min(closest, d2);
      }
    EXPECT_GT(closest, 1e-6);
  }
}

TEST(GaussianClasses, CapacityErrors) {
  tasks::TaskDistribution d;
  d.way = 51;
  d.split = Split::MetaVal;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.way = 5;
  d.shot = 590;
  d.query = 15;
  EXPECT_THROW(tasks::sample_task(d, 1, 0), std::invalid_argument);
  d.shot = 0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(Sinusoid, TargetsFollowAmplitudeAndPhase) {
  tasks::TaskDistribution d;
  d.family = tasks::Family::Sinusoid;
  d.shot = 10;
  d.query = 10;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto t = tasks::sample_task(d, 4, i);
    EXPECT_EQ(t.loss, models::LossKind::MeanSquaredError);
    // y = A sin(x + phi) = a sin x + b cos x; solve the 2x2 normal equations.
    double ss = 0, sc = 0, cc = 0, ys = 0, yc = 0;
    for (const auto* ex : {&t.support, &t.query}) {
      for (std::size_t r = 0; r < ex->size(); ++r) {
        const double x = ex->inputs[r], y = ex->targets[r];
        EXPECT_GE(x, -5.0);
        EXPECT_LE(x, 5.0);
        ss += std::sin(x) * std::sin(x), sc += std::sin(x) * std::cos(x), cc += std::cos(x) * std::cos(x);
        ys += y * std::sin(x), yc += y * std::cos(x);
      }
    }
    const double det = ss * cc - sc * sc;
    const double a = (ys * cc - yc * sc) / det, b = (yc * ss - ys * sc) / det;
    const double amp = std::hypot(a, b), phase = std::atan2(b, a);
    EXPECT_GE(amp, 0.1 - 1e-9);
    EXPECT_LE(amp, 5.0 + 1e-9);
    EXPECT_GE(phase, -1e-9);
    EXPECT_LE(phase, M_PI + 1e-9);
    for (std::size_t r = 0; r < t.query.size(); ++r) {
      EXPECT_NEAR(t.query.targets[r], amp * std::sin(t.query.inputs[r] + phase), 1e-9);
    }
  }
}

TEST(Sinusoid, CapacityError) {
  tasks::TaskDistribution d;
  d.family = tasks::Family::Sinusoid;
  d.shot = 600;
  d.query = 401;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(SampleBatch, SingletonAndDistinctIds) {
  tasks::TaskDistribution d;
  EXPECT_EQ(tasks::sample_batch(d, 1, 0).size(), 1u);
  const auto b = tasks::sample_batch(d, 5, 0);
  std::set<std::uint64_t> ids;
  for (const auto& t : b) ids.insert(t.task_id);
  EXPECT_EQ(ids.size(), 5u);
  EXPECT_EQ(b, tasks::sample_batch(d, 5, 0));
  EXPECT_THROW(tasks::sample_batch(d, 0, 0), std::invalid_argument);
}

TEST(SampleBatch, OffsetBatchesMatchIndividualTasks) {
  tasks::TaskDistribution d;
  const auto b = tasks::sample_batch(d, 3, 8, 10);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(b[i], tasks::sample_task(d, 8, 10 + i));
}

TEST(Episodes, RoundTripSixHundred) {
  tasks::TaskDistribution d;
  d.split = Split::MetaTest;
  const auto tasks = tasks::sample_batch(d, 600, 3);
  const auto path = temp_path("600.bin");
  tasks::write_episodes(path, tasks);
  EXPECT_EQ(tasks::read_episodes(path), tasks);
  std::filesystem::remove(path);
}

TEST(Episodes, RoundTripRegression) {
  tasks::TaskDistribution d;
  d.family = tasks::Family::Sinusoid;
  const auto tasks = tasks::sample_batch(d, 7, 3);
  EXPECT_EQ(tasks::decode_episodes(tasks::encode_episodes(tasks)), tasks);
}

TEST(Episodes, EmptyListIsValid) {
  const auto bytes = tasks::encode_episodes({});
  EXPECT_EQ(bytes.size(), 10u);
  EXPECT_TRUE(tasks::decode_episodes(bytes).empty());
}

TEST(Episodes, TruncatedFileReportsOffset) {
  tasks::TaskDistribution d;
  auto bytes = tasks::encode_episodes(tasks::sample_batch(d, 2, 1));
  bytes.resize(bytes.size() - 5);
  try {
    tasks::decode_episodes(bytes);
    FAIL() << "expected FormatError";
  } catch (const util::FormatError& e) {
    EXPECT_GT(e.offset(), 10u);
    EXPECT_LE(e.offset(), bytes.size());
  }
}

TEST(Episodes, BadMagicVersionAndLoss) {
  tasks::TaskDistribution d;
  const auto good = tasks::encode_episodes(tasks::sample_batch(d, 1, 1));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(tasks::decode_episodes(bad), util::FormatError);
  bad = good;
  bad[4] = 9;
  EXPECT_THROW(tasks::decode_episodes(bad), util::FormatError);
  bad = good;
  bad[10] = 7;
  try {
    tasks::decode_episodes(bad);
    FAIL() << "expected FormatError";
  } catch (const util::FormatError& e) {
    EXPECT_EQ(e.offset(), 10u);
  }
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(tasks::decode_episodes(bad), util::FormatError);
}

TEST(Episodes, MissingFile) { EXPECT_ANY_THROW(tasks::read_episodes(temp_path("does_not_exist.bin"))); }
