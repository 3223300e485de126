#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gradshare/meta/learner.hpp"
#include "gradshare/oracle/reference_maml.hpp"

namespace gradshare::harness {

struct OracleResult {
  std::string name;
  double max_error = 0.0;  // largest relative (or absolute, per case) error observed
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct OracleCase {
  std::string name;
  std::string description;
  double default_tolerance;
  std::function<OracleResult(double tolerance)> run;
};

const std::vector<OracleCase>& oracle_cases();

/// Runs a registered case. Unknown names throw std::invalid_argument listing the cases.
OracleResult run_oracle_case(const std::string& name, std::optional<double> tolerance = std::nullopt);

// Building blocks shared with the test suite.

struct CheckSummary {
  std::size_t cases = 0;
  double max_rel_error = 0.0;
  std::string worst;
};

/// Every differentiable primitive against central differences, `trials` random inputs each.
CheckSummary check_primitives_first_order(std::uint64_t seed, std::size_t trials);
/// Random two-layer compositions, first order.
CheckSummary check_compositions_first_order(std::uint64_t seed, std::size_t cases);
/// Random two-layer compositions: Hessian-vector products against differences of gradients.
CheckSummary check_compositions_second_order(std::uint64_t seed, std::size_t cases);

// Small deterministic meta-learning problem on tanh nets.
struct ToyProblem {
  meta::MetaConfig config;
  meta::ModelSpec model;
  std::vector<tasks::Task> batch;
  meta::MetaParams params;
  meta::GradShareState state;
};

/// input 3, hidden 4, 3-way classification: 31 weights plus K momentum and K gate logits.
ToyProblem toy_problem(meta::Learner learner, bool detach, std::size_t steps, std::size_t tasks, std::uint64_t seed);

oracle::RefNet to_reference(const models::Backbone& b);
oracle::RefTask to_reference(const tasks::Task& t);
std::vector<oracle::RefTask> to_reference(std::span<const tasks::Task> batch);

struct MetaGradCheck {
  double theta = 0.0;
  double momentum = 0.0;
  double gate = 0.0;
  double inner_lr = 0.0;
  double max() const;
};

/// Engine meta-gradient against central differences of the reference objective
/// (with the batch gradients frozen when the problem detaches them).
MetaGradCheck check_meta_gradient(const ToyProblem& p);

/// Largest componentwise |theta_engine - theta_reference| over `iterations`
/// outer steps with gradient sharing off.
double reference_trajectory_gap(meta::Learner learner, std::size_t iterations, std::uint64_t seed);

}  // namespace gradshare::harness
