#include <gtest/gtest.h>

#include <cmath>

#include "gradshare/models/backbone.hpp"
#include "gradshare/oracle/finite_diff.hpp"
#include "gradshare/util/rng.hpp"

using namespace gradshare;
using ad::Tensor;

namespace {

Tensor random(util::Stream& rng, std::size_t r, std::size_t c) {
  Tensor t(r, c);
  for (auto& v : t.span()) v = rng.normal();
  return t;
}

double loss_at(const models::Backbone& b, std::span<const double> theta, const Tensor& x, const Tensor& y,
               models::LossKind kind) {
  ad::NoGradGuard ng;
  const auto layout = models::ParamLayout::for_backbone(b);
  auto p = ad::constant(Tensor::column({theta.begin(), theta.end()}));
  return models::task_loss(b, layout, p, x, y, kind).value().item();
}

}  // namespace

TEST(Backbone, SinusoidTotalDim) {
  const auto layout = models::ParamLayout::for_backbone(models::sinusoid_backbone());
  EXPECT_EQ(layout.total_dim(), 1761u);
  EXPECT_EQ(layout.entries().size(), 6u);
  EXPECT_EQ(layout.entries()[0].name, "layer0.weight");
  EXPECT_EQ(layout.entry("layer2.bias").offset, 1760u);
}

TEST(Backbone, ClassificationDefault) {
  const auto b = models::classification_backbone(16, 5);
  EXPECT_EQ(b.layer_sizes, (std::vector<std::size_t>{16, 64, 64, 5}));
  EXPECT_EQ(b.activation, models::Activation::Relu);
}

TEST(Backbone, RequiresHiddenLayer) {
  models::Backbone b{{3, 2}, models::Activation::Tanh, models::OutputKind::Classification};
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b.layer_sizes = {3, 0, 2};
  EXPECT_THROW(b.validate(), std::invalid_argument);
}

TEST(InitParams, DeterministicGivenSeed) {
  const auto b = models::classification_backbone(16, 5);
  EXPECT_EQ(models::init_params(b, 4), models::init_params(b, 4));
  EXPECT_NE(models::init_params(b, 4), models::init_params(b, 5));
}

TEST(InitParams, BiasesZeroWeightsWithinFanInBound) {
  const auto b = models::classification_backbone(16, 5);
  const auto p = models::init_params(b, 1);
  for (const auto& e : p.layout().entries()) {
    const auto v = p.values(e.name);
    if (e.name.find("bias") != std::string::npos) {
      for (double x : v) EXPECT_EQ(x, 0.0);
    } else {
      const double s = std::sqrt(1.0 / static_cast<double>(e.rows));
      double lo = 0.0, hi = 0.0;
      for (double x : v) {
        EXPECT_LT(std::abs(x), s);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      EXPECT_LT(lo, -0.5 * s);
      EXPECT_GT(hi, 0.5 * s);
    }
  }
}

TEST(ParamSet, FlattenUnflattenIdentity) {
  const auto layout = models::ParamLayout::for_backbone(models::sinusoid_backbone());
  util::Stream rng{77};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(layout.total_dim());
    for (auto& x : v) x = rng.normal();
    EXPECT_EQ(models::ParamSet::unflatten(layout, v).flatten(), v);
  }
  EXPECT_THROW(models::ParamSet::unflatten(layout, std::vector<double>(10)), std::invalid_argument);
}

TEST(Forward, ZeroWeightsGiveUniformLogits) {
  const auto b = models::classification_backbone(4, 5);
  const auto layout = models::ParamLayout::for_backbone(b);
  auto p = ad::leaf(Tensor(layout.total_dim(), 1, 0.0));
  util::Stream rng{3};
  const auto x = random(rng, 7, 4);
  Tensor y(7, 1, std::vector<double>{0, 1, 2, 3, 4, 0, 1});
  auto out = models::forward(b, layout, p, x);
  EXPECT_EQ(out.rows(), 7u);
  EXPECT_EQ(out.cols(), 5u);
  EXPECT_NEAR(models::task_loss(b, layout, p, x, y, models::LossKind::CrossEntropy).value().item(), std::log(5.0),
              1e-15);
}

TEST(Forward, InputWidthMismatch) {
  const auto b = models::classification_backbone(4, 5);
  const auto layout = models::ParamLayout::for_backbone(b);
  auto p = ad::leaf(Tensor(layout.total_dim(), 1, 0.1));
  EXPECT_THROW(models::forward(b, layout, p, Tensor(3, 5)), ad::ShapeError);
  EXPECT_THROW(models::forward(b, layout, ad::leaf(Tensor(5, 1)), Tensor(3, 4)), ad::ShapeError);
}

TEST(TaskLoss, EmptySetIsRejected) {
  const auto b = models::sinusoid_backbone();
  const auto layout = models::ParamLayout::for_backbone(b);
  auto p = ad::leaf(Tensor(layout.total_dim(), 1, 0.1));
  EXPECT_THROW(models::task_loss(b, layout, p, Tensor(0, 1), Tensor(0, 1), models::LossKind::MeanSquaredError),
               std::invalid_argument);
}

TEST(TaskLoss, PerfectRegressionFitIsZero) {
  const auto b = models::sinusoid_backbone();
  const auto layout = models::ParamLayout::for_backbone(b);
  const auto theta = models::init_params(b, 2);
  auto p = ad::constant(Tensor::column(theta.flat()));
  Tensor x(6, 1, std::vector<double>{-3, -1, 0, 0.5, 2, 4});
  const auto pred = models::forward(b, layout, p, x).value();
  EXPECT_EQ(models::task_loss(b, layout, p, x, pred, models::LossKind::MeanSquaredError).value().item(), 0.0);
}

TEST(TaskLoss, MatchesPerExampleMean) {
  for (auto kind : {models::LossKind::CrossEntropy, models::LossKind::MeanSquaredError}) {
    const bool ce = kind == models::LossKind::CrossEntropy;
    models::Backbone b{{3, 6, ce ? 4u : 2u}, models::Activation::Tanh,
                       ce ? models::OutputKind::Classification : models::OutputKind::Regression};
    const auto layout = models::ParamLayout::for_backbone(b);
    const auto theta = models::init_params(b, 8);
    util::Stream rng{9};
    const auto x = random(rng, 5, 3);
    Tensor y = ce ? Tensor(5, 1, std::vector<double>{0, 3, 1, 1, 2}) : random(rng, 5, 2);
    auto p = ad::constant(Tensor::column(theta.flat()));
    const double batch = models::task_loss(b, layout, p, x, y, kind).value().item();
    double total = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
      Tensor xr(1, 3), yr(1, y.cols());
      for (std::size_t c = 0; c < 3; ++c) xr(0, c) = x(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) yr(0, c) = y(r, c);
      total += models::task_loss(b, layout, p, xr, yr, kind).value().item();
    }
    EXPECT_NEAR(batch, total / 5.0, 1e-14);
  }
}

TEST(TaskLoss, GradientMatchesFiniteDifferences) {
  util::Stream rng{21};
  for (auto kind : {models::LossKind::CrossEntropy, models::LossKind::MeanSquaredError}) {
    for (auto act : {models::Activation::Tanh, models::Activation::Relu}) {
      const bool ce = kind == models::LossKind::CrossEntropy;
      models::Backbone b{{5, 4, 3}, act, ce ? models::OutputKind::Classification : models::OutputKind::Regression};
      const auto layout = models::ParamLayout::for_backbone(b);
      for (int trial = 0; trial < 10; ++trial) {
        const auto theta = models::init_params(b, 100 + trial).flatten();
        const auto x = random(rng, 6, 5);
        Tensor y = ce ? Tensor(6, 1, std::vector<double>{0, 1, 2, 2, 1, 0}) : random(rng, 6, 3);
        auto p = ad::leaf(Tensor::column(theta));
        const auto g = ad::grad(models::task_loss(b, layout, p, x, y, kind), {p})[0].value().values();
        const auto fd = oracle::central_difference(
            [&](std::span<const double> t) { return loss_at(b, t, x, y, kind); }, theta, 1e-6);
        EXPECT_LE(oracle::relative_error(g, fd, 1e-8), 1e-4);
      }
    }
  }
}

TEST(Accuracy, ArgmaxAgainstLabels) {
  Tensor logits(3, 2, std::vector<double>{1, 0, 0, 1, 2, 3});
  Tensor labels(3, 1, std::vector<double>{0, 0, 1});
  EXPECT_DOUBLE_EQ(models::accuracy(logits, labels), 2.0 / 3.0);
}
