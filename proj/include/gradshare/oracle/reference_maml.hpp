#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gradshare::oracle {

// Plain MAML / Meta-SGD written out with hand-derived backprop. Second-order
// terms come from Hessian-vector products taken with forward-mode dual numbers
// over that backprop, so nothing here touches the engine's autodiff.

enum class RefActivation { Tanh, Relu };
enum class RefLoss { MeanSquaredError, CrossEntropy };

// Dense net with the same flat parameter order as the engine: per layer the
// (in x out) row-major weight, then the bias. Zero hidden layers is a linear model.
struct RefNet {
  std::vector<std::size_t> sizes;
  RefActivation activation = RefActivation::Relu;
  RefLoss loss = RefLoss::CrossEntropy;

  std::size_t dim() const;
};

struct RefData {
  std::size_t rows = 0;
  std::vector<double> inputs;   // rows x sizes.front()
  std::vector<double> targets;  // rows x 1 labels, or rows x sizes.back()
};

struct RefTask {
  RefData support;
  RefData query;
};

double ref_loss(const RefNet& net, std::span<const double> theta, const RefData& data);
std::vector<double> ref_gradient(const RefNet& net, std::span<const double> theta, const RefData& data);
/// Hessian of the loss times v.
std::vector<double> ref_hvp(const RefNet& net, std::span<const double> theta, const RefData& data,
                            std::span<const double> v);

struct RefAdaptation {
  std::vector<std::vector<double>> adapted;  // theta_{t,K}
  double objective = 0.0;                    // mean query loss
  std::vector<double> theta_grad;
  std::vector<double> lr_grad;               // per-entry step sizes; empty for a scalar step
};

/// K plain gradient steps per task. `step` has one entry (MAML) or dim entries (Meta-SGD).
RefAdaptation reference_maml(const RefNet& net, std::span<const double> theta, std::span<const RefTask> tasks,
                             std::size_t steps, std::span<const double> step);

/// Mean query loss only.
double reference_objective(const RefNet& net, std::span<const double> theta, std::span<const RefTask> tasks,
                           std::size_t steps, std::span<const double> step);

/// Meta-gradient with respect to theta by central differences of reference_objective.
std::vector<double> reference_fd_meta_gradient(const RefNet& net, std::span<const double> theta,
                                               std::span<const RefTask> tasks, std::size_t steps,
                                               std::span<const double> step, double rel_eps = 1e-5);

// Inputs of the shared-gradient inner loop, all plain values.
struct RefSharedPoint {
  std::vector<double> theta;
  std::vector<double> step;  // one entry, or one per parameter
  std::vector<double> momentum;
  std::vector<double> gate;
  std::vector<std::vector<double>> previous;  // stored running mean per step; empty means unseeded
};

struct RefSharedResult {
  double objective = 0.0;
  std::vector<std::vector<double>> shared;   // g_k used at each step
  std::vector<std::vector<double>> running;  // running mean after each step
  std::vector<std::vector<double>> adapted;
};

/// Mean query loss after K shared-gradient steps, computed directly in doubles.
/// With `frozen` the batch gradient of step k is replaced by frozen[k].
RefSharedResult reference_shared_objective(const RefNet& net, const RefSharedPoint& point,
                                           std::span<const RefTask> tasks, std::size_t steps, double eps_norm,
                                           const std::vector<std::vector<double>>* frozen = nullptr);

struct RefAdam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct RefTrajectory {
  std::vector<std::vector<double>> theta;  // after each outer iteration
  std::vector<std::vector<double>> step;   // learned step sizes after each iteration (if learned)
};

/// Outer Adam on the exact meta-gradient, one iteration per batch.
RefTrajectory reference_train(const RefNet& net, std::vector<double> theta, std::vector<double> step,
                              std::span<const std::vector<RefTask>> batches, std::size_t steps, const RefAdam& adam,
                              bool learn_step);

}  // namespace gradshare::oracle
