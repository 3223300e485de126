#include "gradshare/harness/oracle_cases.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gradshare/oracle/ema.hpp"
#include "gradshare/oracle/finite_diff.hpp"
#include "gradshare/util/rng.hpp"

namespace gradshare::harness {

namespace {

using ad::Tensor;
using ad::Var;

Tensor random_tensor(util::Stream& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Entries bounded away from zero by `gap`, for kinks and poles.
Tensor away_from_zero(util::Stream& rng, std::size_t rows, std::size_t cols, double gap, double hi) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(gap, hi);
  return t;
}

Tensor labels(util::Stream& rng, std::size_t rows, std::size_t classes) {
  Tensor t(rows, 1);
  for (std::size_t i = 0; i < rows; ++i) t[i] = static_cast<double>(rng.below(classes));
  return t;
}

using Builder = std::function<Var(const std::vector<Var>&)>;

std::vector<Var> make_leaves(const std::vector<Tensor>& values) {
  std::vector<Var> leaves;
  for (const auto& v : values) leaves.push_back(ad::leaf(v));
  return leaves;
}

std::vector<double> concat(const ad::GradMap& g) {
  std::vector<double> out;
  for (const auto& v : g.all()) out.insert(out.end(), v.value().span().begin(), v.value().span().end());
  return out;
}

std::vector<double> flat_inputs(const std::vector<Tensor>& inputs) {
  std::vector<double> x;
  for (const auto& t : inputs) x.insert(x.end(), t.span().begin(), t.span().end());
  return x;
}

std::vector<Tensor> split_inputs(std::span<const double> x, const std::vector<Tensor>& shapes) {
  std::vector<Tensor> out;
  std::size_t at = 0;
  for (const auto& s : shapes) {
    Tensor t(s.rows(), s.cols());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = x[at++];
    out.push_back(std::move(t));
  }
  return out;
}

double first_order_error(const Builder& f, const std::vector<Tensor>& inputs) {
  auto leaves = make_leaves(inputs);
  const auto analytic = concat(ad::grad(f(leaves), leaves));
  const auto numeric = oracle::central_difference(
      [&](std::span<const double> x) {
        ad::NoGradGuard ng;
        std::vector<Var> c;
        for (auto& t : split_inputs(x, inputs)) c.push_back(ad::constant(std::move(t)));
        return f(c).value().item();
      },
      flat_inputs(inputs), 1e-6);
  return oracle::relative_error(analytic, numeric, 1e-8);
}

// Second order through a random direction: d/dx <r, grad f(x)>.
double second_order_error(const Builder& f, const std::vector<Tensor>& inputs, util::Stream& rng) {
  std::vector<Tensor> dirs;
  for (const auto& t : inputs) dirs.push_back(random_tensor(rng, t.rows(), t.cols()));
  auto contract = [&](const ad::GradMap& g) {
    Var h;
    for (std::size_t i = 0; i < g.size(); ++i) {
      Var term = ad::sum(g[i] * ad::constant(dirs[i]));
      h = h ? h + term : term;
    }
    return h;
  };
  auto leaves = make_leaves(inputs);
  const auto g = ad::grad(f(leaves), leaves, /*create_graph=*/true);
  const auto analytic = concat(ad::grad(contract(g), leaves));
  const auto numeric = oracle::central_difference(
      [&](std::span<const double> x) {
        auto l = make_leaves(split_inputs(x, inputs));
        return contract(ad::grad(f(l), l)).value().item();
      },
      flat_inputs(inputs), 1e-5);
  return oracle::relative_error(analytic, numeric, 1e-8);
}

struct Primitive {
  std::string name;
  std::function<std::pair<Builder, std::vector<Tensor>>(util::Stream&)> make;
};

// Reduces a tensor-valued op to a scalar with a fixed random weighting.
Builder weighted(std::function<Var(const std::vector<Var>&)> op, Tensor weights) {
  return [op = std::move(op), w = std::move(weights)](const std::vector<Var>& x) {
    return ad::sum(op(x) * ad::constant(w));
  };
}

std::vector<Primitive> primitives() {
  using V = std::vector<Var>;
  auto unary = [](std::string name, std::function<Var(const Var&)> op,
                  std::function<Tensor(util::Stream&)> input) {
    return Primitive{name, [op, input](util::Stream& r) {
                       Tensor x = input(r);
                       const auto shape = [&] {
                         ad::NoGradGuard ng;
                         return op(ad::constant(x)).value();
                       }();
                       Tensor w = random_tensor(r, shape.rows(), shape.cols());
                       return std::make_pair(weighted([op](const V& v) { return op(v[0]); }, w),
                                             std::vector<Tensor>{x});
                     }};
  };
  auto normal = [](std::size_t r, std::size_t c) {
    return [r, c](util::Stream& s) { return random_tensor(s, r, c); };
  };
  std::vector<Primitive> p;
  p.push_back({"matmul", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::matmul(v[0], v[1]); },
                                                random_tensor(r, 3, 2)),
                                       std::vector<Tensor>{random_tensor(r, 3, 4), random_tensor(r, 4, 2)});
               }});
  p.push_back(unary("transpose", [](const Var& x) { return ad::transpose(x); }, normal(3, 4)));
  for (int kind = 0; kind < 3; ++kind) {
    const char* names[] = {"add", "sub", "mul"};
    p.push_back({names[kind], [kind](util::Stream& r) {
                   return std::make_pair(weighted(
                                             [kind](const V& v) {
                                               return kind == 0 ? v[0] + v[1] : kind == 1 ? v[0] - v[1] : v[0] * v[1];
                                             },
                                             random_tensor(r, 3, 4)),
                                         std::vector<Tensor>{random_tensor(r, 3, 4), random_tensor(r, 3, 4)});
                 }});
  }
  p.push_back(unary("scale", [](const Var& x) { return ad::scale(x, -1.7); }, normal(3, 4)));
  p.push_back(unary("affine", [](const Var& x) { return ad::affine(x, 0.6, -0.4); }, normal(3, 4)));
  p.push_back({"scalar_mul", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::scalar_mul(v[0], v[1]); },
                                                random_tensor(r, 3, 4)),
                                       std::vector<Tensor>{random_tensor(r, 1, 1), random_tensor(r, 3, 4)});
               }});
  p.push_back({"add_row_broadcast", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::add_row_broadcast(v[0], v[1]); },
                                                random_tensor(r, 3, 4)),
                                       std::vector<Tensor>{random_tensor(r, 3, 4), random_tensor(r, 1, 4)});
               }});
  p.push_back({"sum_rows", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::sum_rows(v[0]); }, random_tensor(r, 1, 4)),
                                       std::vector<Tensor>{random_tensor(r, 3, 4)});
               }});
  p.push_back({"broadcast_rows", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::broadcast_rows(v[0], 3); },
                                                random_tensor(r, 3, 4)),
                                       std::vector<Tensor>{random_tensor(r, 1, 4)});
               }});
  p.push_back({"row_sum", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::row_sum(v[0]); }, random_tensor(r, 3, 1)),
                                       std::vector<Tensor>{random_tensor(r, 3, 4)});
               }});
  p.push_back({"broadcast_cols", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::broadcast_cols(v[0], 4); },
                                                random_tensor(r, 3, 4)),
                                       std::vector<Tensor>{random_tensor(r, 3, 1)});
               }});
  p.push_back({"fill", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::fill(v[0], 3, 4); },
                                                random_tensor(r, 3, 4)),
                                       std::vector<Tensor>{random_tensor(r, 1, 1)});
               }});
  p.push_back(unary("tanh", [](const Var& x) { return ad::tanh(x); }, normal(3, 4)));
  p.push_back(unary("relu", [](const Var& x) { return ad::relu(x); },
                    [](util::Stream& s) { return away_from_zero(s, 3, 4, 0.05, 2.0); }));
  p.push_back(unary("sigmoid", [](const Var& x) { return ad::sigmoid(x); }, normal(3, 4)));
  p.push_back(unary("exp", [](const Var& x) { return ad::exp(x); }, normal(3, 4)));
  p.push_back(unary("log", [](const Var& x) { return ad::log(x); },
                    [](util::Stream& s) {
                      Tensor t(3, 4);
                      for (std::size_t i = 0; i < t.size(); ++i) t[i] = s.uniform(0.3, 3.0);
                      return t;
                    }));
  p.push_back(unary("reciprocal", [](const Var& x) { return ad::reciprocal(x); },
                    [](util::Stream& s) { return away_from_zero(s, 3, 4, 0.4, 2.0); }));
  p.push_back({"sum", [](util::Stream& r) {
                 return std::make_pair(Builder([](const V& v) { return ad::sum(v[0]); }),
                                       std::vector<Tensor>{random_tensor(r, 3, 4)});
               }});
  p.push_back({"mean", [](util::Stream& r) {
                 return std::make_pair(Builder([](const V& v) { return ad::mean(v[0]); }),
                                       std::vector<Tensor>{random_tensor(r, 3, 4)});
               }});
  p.push_back({"norm2", [](util::Stream& r) {
                 return std::make_pair(Builder([](const V& v) { return ad::norm2(v[0]); }),
                                       std::vector<Tensor>{random_tensor(r, 3, 4)});
               }});
  p.push_back(unary("softmax", [](const Var& x) { return ad::softmax(x); }, normal(3, 5)));
  p.push_back({"softmax_cross_entropy", [](util::Stream& r) {
                 Tensor y = labels(r, 4, 5);
                 return std::make_pair(Builder([y](const V& v) { return ad::softmax_cross_entropy(v[0], y); }),
                                       std::vector<Tensor>{random_tensor(r, 4, 5, 2.0)});
               }});
  p.push_back({"mean_squared_error", [](util::Stream& r) {
                 Tensor y = random_tensor(r, 4, 2);
                 return std::make_pair(Builder([y](const V& v) { return ad::mean_squared_error(v[0], y); }),
                                       std::vector<Tensor>{random_tensor(r, 4, 2)});
               }});
  p.push_back({"slice", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::slice(v[0], 2, 2, 3); },
                                                random_tensor(r, 2, 3)),
                                       std::vector<Tensor>{random_tensor(r, 12, 1)});
               }});
  p.push_back({"scatter", [](util::Stream& r) {
                 return std::make_pair(weighted([](const V& v) { return ad::scatter(v[0], 3, 4, 4); },
                                                random_tensor(r, 4, 4)),
                                       std::vector<Tensor>{random_tensor(r, 2, 3)});
               }});
  return p;
}

Var activation(int kind, const Var& x) {
  switch (kind) {
    case 0: return ad::tanh(x);
    case 1: return ad::sigmoid(x);
    case 2: return ad::relu(x);
    case 3: return ad::exp(ad::scale(x, 0.3));
    default: return ad::affine(x, 0.5, 0.1) * x;
  }
}

// x (n x d), W1 (d x h), b1 (1 x h), W2 (h x c) feeding one of several scalar heads.
std::pair<Builder, std::vector<Tensor>> random_composition(util::Stream& r) {
  const std::size_t n = 2 + r.below(3), d = 2 + r.below(3), h = 2 + r.below(4), c = 2 + r.below(3);
  const int act1 = static_cast<int>(r.below(5)), act2 = static_cast<int>(r.below(5));
  const int head = static_cast<int>(r.below(6));
  Tensor y = labels(r, n, c);
  Tensor target = random_tensor(r, n, c);
  Tensor w = random_tensor(r, n, c);
  Builder f = [=](const std::vector<Var>& v) {
    Var z1 = ad::add_row_broadcast(ad::matmul(v[0], v[1]), v[2]);
    Var z2 = ad::matmul(activation(act1, z1), v[3]);
    switch (head) {
      case 0: return ad::softmax_cross_entropy(z2, y);
      case 1: return ad::mean_squared_error(activation(act2, z2), target);
      case 2: return ad::norm2(activation(act2, z2));
      case 3: return ad::mean(ad::exp(ad::scale(z2, 0.3)));
      case 4: return ad::sum(ad::sigmoid(z2) * ad::constant(w));
      default: return ad::log(ad::sum(ad::exp(activation(act2, z2))));
    }
  };
  return {f, {random_tensor(r, n, d), random_tensor(r, d, h, 0.7), random_tensor(r, 1, h, 0.3),
              random_tensor(r, h, c, 0.7)}};
}

void note(CheckSummary& s, double err, const std::string& what) {
  ++s.cases;
  if (!(err <= s.max_rel_error)) {
    s.max_rel_error = std::isnan(err) ? INFINITY : err;
    s.worst = what;
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_gap(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

meta::MetaConfig trajectory_config(meta::Learner learner) {
  meta::MetaConfig c;
  c.learner = learner;
  c.grad_share = false;
  c.inner_steps = 5;
  c.task_batch = 5;
  return c;
}

OracleResult finish(std::string name, double err, double tol, std::string detail,
                    std::chrono::steady_clock::time_point start) {
  OracleResult r;
  r.name = std::move(name);
  r.max_error = err;
  r.tolerance = tol;
  r.passed = err <= tol;
  r.detail = std::move(detail);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string describe_check(const MetaGradCheck& c) {
  std::ostringstream out;
  out << "theta " << c.theta << ", m " << c.momentum << ", lambda " << c.gate;
  if (c.inner_lr > 0.0) out << ", alpha " << c.inner_lr;
  return out.str();
}

OracleResult meta_grad_case(const std::string& name, meta::Learner learner, std::vector<bool> detach_settings,
                            double tol) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string detail;
  const std::pair<std::size_t, std::size_t> shapes[] = {{2, 2}, {3, 3}};
  for (bool detach : detach_settings) {
    for (auto [k, t] : shapes) {
      const auto c = check_meta_gradient(toy_problem(learner, detach, k, t, 11 + k));
      if (c.max() >= worst) {
        worst = c.max();
        detail = std::string(detach ? "detached" : "full flow") + ", K=" + std::to_string(k) +
                 ", T=" + std::to_string(t) + ": " + describe_check(c);
      }
    }
  }
  return finish(name, worst, tol, detail, start);
}

}  // namespace

CheckSummary check_primitives_first_order(std::uint64_t seed, std::size_t trials) {
  CheckSummary s;
  for (const auto& p : primitives()) {
    util::Stream rng{seed, 0x7072696D, std::hash<std::string>{}(p.name)};
    for (std::size_t i = 0; i < trials; ++i) {
      auto [f, inputs] = p.make(rng);
      note(s, first_order_error(f, inputs), p.name + " trial " + std::to_string(i));
    }
  }
  return s;
}

CheckSummary check_compositions_first_order(std::uint64_t seed, std::size_t cases) {
  CheckSummary s;
  util::Stream rng{seed, 0x636F6D31};
  for (std::size_t i = 0; i < cases; ++i) {
    auto [f, inputs] = random_composition(rng);
    note(s, first_order_error(f, inputs), "composition " + std::to_string(i));
  }
  return s;
}

CheckSummary check_compositions_second_order(std::uint64_t seed, std::size_t cases) {
  CheckSummary s;
  util::Stream rng{seed, 0x636F6D32};
  for (std::size_t i = 0; i < cases; ++i) {
    auto [f, inputs] = random_composition(rng);
    note(s, second_order_error(f, inputs, rng), "composition " + std::to_string(i));
  }
  return s;
}

oracle::RefNet to_reference(const models::Backbone& b) {
  oracle::RefNet net;
  net.sizes = b.layer_sizes;
  net.activation = b.activation == models::Activation::Tanh ? oracle::RefActivation::Tanh : oracle::RefActivation::Relu;
  net.loss = b.output == models::OutputKind::Classification ? oracle::RefLoss::CrossEntropy
                                                            : oracle::RefLoss::MeanSquaredError;
  return net;
}

oracle::RefTask to_reference(const tasks::Task& t) {
  auto data = [](const tasks::Examples& e) {
    return oracle::RefData{e.size(), e.inputs.values(), e.targets.values()};
  };
  return {data(t.support), data(t.query)};
}

std::vector<oracle::RefTask> to_reference(std::span<const tasks::Task> batch) {
  std::vector<oracle::RefTask> out;
  for (const auto& t : batch) out.push_back(to_reference(t));
  return out;
}

ToyProblem toy_problem(meta::Learner learner, bool detach, std::size_t steps, std::size_t task_count,
                       std::uint64_t seed) {
  ToyProblem p;
  tasks::TaskDistribution d;
  d.gaussian.input_dim = 3;
  d.way = 3;
  d.shot = 2;
  d.query = 3;
  p.batch = tasks::sample_batch(d, task_count, seed);

  models::Backbone b{{3, 4, 3}, models::Activation::Tanh, models::OutputKind::Classification};
  p.model = meta::ModelSpec::from(b);
  p.config.learner = learner;
  p.config.grad_share = true;
  p.config.detach_shared_gradient = detach;
  p.config.inner_steps = steps;
  p.config.task_batch = task_count;
  p.config.inner_lr = 0.3;
  p.params = meta::initial_meta_params(p.config, models::init_params(b, seed));

  util::Stream rng{seed, 0x746F79};
  for (auto& m : p.params.momentum) m = 0.8 * rng.normal();
  for (auto& g : p.params.gate) g = 0.8 * rng.normal();
  for (auto& a : p.params.inner_lr) a = 0.3 * rng.uniform(0.5, 1.5);

  const std::size_t dim = p.model.layout.total_dim();
  p.state = meta::GradShareState::create(steps, dim);
  for (std::size_t k = 0; k < steps; ++k) {
    auto& v = p.state.running_mean[k];
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    const double target = rng.uniform(0.5, 1.0);
    for (auto& x : v) x *= target / std::sqrt(norm);
    p.state.step_initialized[k] = 1;
  }
  p.state.momentum = p.params.momentum;
  p.state.gate = p.params.gate;
  return p;
}

double MetaGradCheck::max() const { return std::max({theta, momentum, gate, inner_lr}); }

MetaGradCheck check_meta_gradient(const ToyProblem& p) {
  auto state = p.state;
  const auto analytic = meta::meta_gradient(p.model, p.config, p.params, p.batch, state);

  const auto net = to_reference(p.model.backbone);
  const auto tasks = to_reference(p.batch);
  const std::size_t k = p.config.inner_steps;
  auto point_of = [&](const oracle::MetaPoint& mp) {
    oracle::RefSharedPoint sp;
    sp.theta = mp.theta;
    sp.step = mp.inner_lr.empty() ? std::vector<double>{p.config.inner_lr} : mp.inner_lr;
    sp.momentum = mp.momentum;
    sp.gate = mp.gate;
    sp.previous = p.state.running_mean;
    return sp;
  };
  const oracle::MetaPoint base{p.params.theta, p.params.inner_lr, p.params.momentum, p.params.gate};
  std::vector<std::vector<double>> frozen;
  if (p.config.detach_shared_gradient) {
    frozen = oracle::reference_shared_objective(net, point_of(base), tasks, k, p.config.eps_norm).shared;
  }
  const auto numeric = oracle::finite_diff_meta_gradient(
      [&](const oracle::MetaPoint& mp) {
        return oracle::reference_shared_objective(net, point_of(mp), tasks, k, p.config.eps_norm,
                                                  frozen.empty() ? nullptr : &frozen)
            .objective;
      },
      base);

  MetaGradCheck c;
  c.theta = oracle::relative_error(analytic.grad.theta, numeric.theta, 1e-8);
  c.momentum = oracle::relative_error(analytic.grad.momentum, numeric.momentum, 1e-8);
  c.gate = oracle::relative_error(analytic.grad.gate, numeric.gate, 1e-8);
  if (!numeric.inner_lr.empty()) c.inner_lr = oracle::relative_error(analytic.grad.inner_lr, numeric.inner_lr, 1e-8);
  return c;
}

double reference_trajectory_gap(meta::Learner learner, std::size_t iterations, std::uint64_t seed) {
  const auto config = trajectory_config(learner);
  const tasks::TaskDistribution dist;
  const auto backbone = models::classification_backbone(dist.input_dim(), dist.way);
  meta::MetaLearner engine(config, backbone, seed);

  std::vector<std::vector<oracle::RefTask>> batches;
  std::vector<std::vector<tasks::Task>> engine_batches;
  for (std::size_t i = 0; i < iterations; ++i) {
    engine_batches.push_back(tasks::sample_batch(dist, config.task_batch, seed, i * config.task_batch));
    batches.push_back(to_reference(engine_batches.back()));
  }
  const bool sgd = learner == meta::Learner::MetaSgd;
  const auto reference = oracle::reference_train(
      to_reference(backbone), engine.params().theta,
      sgd ? engine.params().inner_lr : std::vector<double>{config.inner_lr}, batches, config.inner_steps,
      oracle::RefAdam{config.outer.lr, config.outer.beta1, config.outer.beta2, config.outer.eps}, sgd);

  double gap = 0.0;
  for (std::size_t i = 0; i < iterations; ++i) {
    engine.train_iteration(engine_batches[i]);
    gap = std::max(gap, max_gap(engine.params().theta, reference.theta[i]));
    if (sgd) gap = std::max(gap, max_gap(engine.params().inner_lr, reference.step[i]));
  }
  return gap;
}

const std::vector<OracleCase>& oracle_cases() {
  static const std::vector<OracleCase> cases = {
      {"ema-closed-form", "iterated running mean against its closed form, 1000 random sequences", 1e-12,
       [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         util::Stream rng{0x656D61};
         double worst = 0.0;
         for (int s = 0; s < 1000; ++s) {
           const std::size_t n = 1 + rng.below(12), dim = 1 + rng.below(8);
           const double m = 3.0 * rng.normal();
           std::vector<std::vector<double>> seq(n, std::vector<double>(dim));
           for (auto& g : seq)
             for (auto& x : g) x = rng.normal();
           const auto closed = oracle::ema_closed_form(seq, m);
           auto state = meta::GradShareState::create(1, dim, m);
           const auto logits = ad::constant(Tensor::column({m}));
           for (std::size_t j = 0; j < n; ++j) {
             const auto out = meta::update_running_mean(state, ad::constant(Tensor::column(seq[j])), 0, logits);
             worst = std::max(worst, max_gap(out.value().span(), closed[j]) / std::max(1.0, max_abs(closed[j])));
           }
         }
         return finish("ema-closed-form", worst, tol, "max error relative to max(1, |closed form|)", start);
       }},
      {"meta-grad-full-flow", "meta-gradient over (theta, m, lambda) with full flow through g_k vs differences",
       1e-3, [](double tol) { return meta_grad_case("meta-grad-full-flow", meta::Learner::Maml, {false}, tol); }},
      {"meta-grad-detached", "meta-gradient with g_k detached from theta vs differences with g_k frozen", 1e-3,
       [](double tol) { return meta_grad_case("meta-grad-detached", meta::Learner::Maml, {true}, tol); }},
      {"meta-grad-meta-sgd", "Meta-SGD meta-gradient over (theta, alpha, m, lambda), both g_k settings", 1e-3,
       [](double tol) { return meta_grad_case("meta-grad-meta-sgd", meta::Learner::MetaSgd, {false, true}, tol); }},
      {"reference-maml", "3 outer iterations without sharing vs the reference MAML recursion", 1e-12,
       [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         const double gap = reference_trajectory_gap(meta::Learner::Maml, 3, 5);
         return finish("reference-maml", gap, tol, "max componentwise |theta difference|", start);
       }},
      {"reference-meta-sgd", "3 outer iterations of Meta-SGD without sharing vs the reference recursion", 1e-12,
       [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         const double gap = reference_trajectory_gap(meta::Learner::MetaSgd, 3, 5);
         return finish("reference-meta-sgd", gap, tol, "max componentwise |theta or alpha difference|", start);
       }},
      {"gate-zero-endpoint", "gate weight pinned to 0 reproduces the no-sharing trajectory", 1e-12,
       [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         auto plain = trajectory_config(meta::Learner::Maml);
         auto pinned = plain;
         pinned.grad_share = true;
         pinned.gate_weight_override = 0.0;
         const tasks::TaskDistribution dist;
         const auto backbone = models::classification_backbone(dist.input_dim(), dist.way);
         meta::MetaLearner a(plain, backbone, 3), b(pinned, backbone, 3);
         double gap = 0.0, m_grad = 0.0;
         for (std::size_t i = 0; i < 3; ++i) {
           const auto batch = tasks::sample_batch(dist, plain.task_batch, 3, i * plain.task_batch);
           a.train_iteration(batch);
           m_grad = std::max(m_grad, max_abs(b.train_iteration(batch).grad.momentum));
           gap = std::max(gap, max_gap(a.params().theta, b.params().theta));
         }
         std::ostringstream detail;
         detail << "max |theta difference| " << gap << ", max |dL/dm| " << m_grad;
         return finish("gate-zero-endpoint", std::max(gap, m_grad), tol, detail.str(), start);
       }},
      {"zero-shot-limit", "lambda pinned to +50 gives every task the same adapted parameters", 1e-9,
       [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         meta::MetaConfig c;
         c.gate_init = 50.0;
         c.train_gates = false;
         const tasks::TaskDistribution dist;
         const auto model = meta::ModelSpec::from(models::classification_backbone(dist.input_dim(), dist.way));
         auto params = meta::initial_meta_params(c, models::init_params(model.backbone, 9));
         auto state = meta::GradShareState::create(c.inner_steps, model.layout.total_dim(), 0.0, c.gate_init);
         double gap = 0.0;
         for (std::size_t it = 0; it < 2; ++it) {
           const auto batch = tasks::sample_batch(dist, c.task_batch, 9, it * c.task_batch);
           const auto r = meta::inner_adapt(model, c, meta::OuterLeaves::from(params), batch, state);
           for (const auto& a : r.adapted) gap = std::max(gap, max_gap(a.value().span(), r.adapted[0].value().span()));
         }
         return finish("zero-shot-limit", gap, tol, "max |theta_t,K - theta_1,K| over two batches of 5 tasks", start);
       }},
      {"autodiff-first-order", "every primitive (100 inputs each) and 100 random compositions vs differences", 1e-4,
       [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         const auto a = check_primitives_first_order(1, 100);
         const auto b = check_compositions_first_order(2, 100);
         const auto& w = a.max_rel_error >= b.max_rel_error ? a : b;
         return finish("autodiff-first-order", w.max_rel_error, tol,
                       std::to_string(a.cases + b.cases) + " cases, worst: " + w.worst, start);
       }},
      {"autodiff-second-order", "Hessian-vector products of 100 random compositions vs differences of gradients",
       1e-3, [](double tol) {
         const auto start = std::chrono::steady_clock::now();
         const auto s = check_compositions_second_order(3, 100);
         return finish("autodiff-second-order", s.max_rel_error, tol,
                       std::to_string(s.cases) + " cases, worst: " + s.worst, start);
       }},
  };
  return cases;
}

OracleResult run_oracle_case(const std::string& name, std::optional<double> tolerance) {
  for (const auto& c : oracle_cases()) {
    if (c.name == name) return c.run(tolerance.value_or(c.default_tolerance));
  }
  std::string names;
  for (const auto& c : oracle_cases()) names += (names.empty() ? "" : ", ") + c.name;
  throw std::invalid_argument("unknown oracle case '" + name + "'; available: " + names);
}

}  // namespace gradshare::harness
