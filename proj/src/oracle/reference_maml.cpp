#include "gradshare/oracle/reference_maml.hpp"

#include <cmath>
#include <stdexcept>

#include "gradshare/oracle/finite_diff.hpp"

namespace gradshare::oracle {

namespace {

// Value and directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
Dual tanh(Dual a) {
  const double t = std::tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}
double value_of(Dual a) { return a.v; }

double value_of(double a) { return a; }

template <typename S>
S activate(RefActivation act, S z) {
  using std::tanh;
  if (act == RefActivation::Tanh) return tanh(z);
  return value_of(z) > 0.0 ? z : S(0.0);
}

template <typename S>
S activate_deriv(RefActivation act, S z) {
  using std::tanh;
  if (act == RefActivation::Tanh) {
    const S t = tanh(z);
    return S(1.0) - t * t;
  }
  return S(value_of(z) > 0.0 ? 1.0 : 0.0);
}

// Loss and its gradient for one data set, written out layer by layer.
template <typename S>
S loss_and_grad(const RefNet& net, std::span<const S> theta, const RefData& data, std::vector<S>* grad) {
  using std::exp;
  using std::log;
  const std::size_t layers = net.sizes.size() - 1;
  const std::size_t n = data.rows;
  std::vector<std::size_t> offset(layers);
  for (std::size_t l = 0, at = 0; l < layers; ++l) {
    offset[l] = at;
    at += net.sizes[l] * net.sizes[l + 1] + net.sizes[l + 1];
  }

  // acts[l] is the input to layer l, pre[l] its pre-activation output.
  std::vector<std::vector<S>> acts(layers + 1), pre(layers);
  acts[0].assign(data.inputs.begin(), data.inputs.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = net.sizes[l], out = net.sizes[l + 1];
    const S* w = theta.data() + offset[l];
    const S* b = w + in * out;
    pre[l].assign(n * out, S(0.0));
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < out; ++j) {
        S acc = b[j];
        for (std::size_t i = 0; i < in; ++i) acc += acts[l][r * in + i] * w[i * out + j];
        pre[l][r * out + j] = acc;
      }
    }
    if (l + 1 < layers) {
      acts[l + 1].resize(n * out);
      for (std::size_t i = 0; i < n * out; ++i) acts[l + 1][i] = activate(net.activation, pre[l][i]);
    }
  }

  const std::size_t classes = net.sizes.back();
  const auto& z = pre.back();
  std::vector<S> dz(n * classes);
  S loss(0.0);
  if (net.loss == RefLoss::MeanSquaredError) {
    const double count = static_cast<double>(n * classes);
    for (std::size_t i = 0; i < n * classes; ++i) {
      const S e = z[i] - S(data.targets[i]);
      loss += e * e;
      dz[i] = S(2.0 / count) * e;
    }
    loss = loss / S(count);
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      double mx = value_of(z[r * classes]);
      for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, value_of(z[r * classes + c]));
      S total(0.0);
      std::vector<S> e(classes);
      for (std::size_t c = 0; c < classes; ++c) {
        e[c] = exp(z[r * classes + c] - S(mx));
        total += e[c];
      }
      const auto label = static_cast<std::size_t>(data.targets[r]);
      loss += S(mx) + log(total) - z[r * classes + label];
      for (std::size_t c = 0; c < classes; ++c) {
        dz[r * classes + c] = (e[c] / total - S(c == label ? 1.0 : 0.0)) / S(static_cast<double>(n));
      }
    }
    loss = loss / S(static_cast<double>(n));
  }
  if (!grad) return loss;

  grad->assign(theta.size(), S(0.0));
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = net.sizes[l], out = net.sizes[l + 1];
    const S* w = theta.data() + offset[l];
    S* gw = grad->data() + offset[l];
    S* gb = gw + in * out;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < out; ++j) {
        const S d = dz[r * out + j];
        gb[j] += d;
        for (std::size_t i = 0; i < in; ++i) gw[i * out + j] += acts[l][r * in + i] * d;
      }
    }
    if (l == 0) break;
    std::vector<S> da(n * in, S(0.0));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < in; ++i) {
        S acc(0.0);
        for (std::size_t j = 0; j < out; ++j) acc += dz[r * out + j] * w[i * out + j];
        da[r * in + i] = acc * activate_deriv(net.activation, pre[l - 1][r * in + i]);
      }
    dz = std::move(da);
  }
  return loss;
}

void check(const RefNet& net, std::span<const double> theta) {
  if (net.sizes.size() < 2) throw std::invalid_argument("reference net needs input and output sizes");
  if (theta.size() != net.dim()) throw std::invalid_argument("reference net: parameter length mismatch");
}

double step_at(std::span<const double> step, std::size_t i) { return step.size() == 1 ? step[0] : step[i]; }

}  // namespace

std::size_t RefNet::dim() const {
  std::size_t d = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) d += sizes[l] * sizes[l + 1] + sizes[l + 1];
  return d;
}

double ref_loss(const RefNet& net, std::span<const double> theta, const RefData& data) {
  check(net, theta);
  return loss_and_grad<double>(net, theta, data, nullptr);
}

std::vector<double> ref_gradient(const RefNet& net, std::span<const double> theta, const RefData& data) {
  check(net, theta);
  std::vector<double> g;
  loss_and_grad<double>(net, theta, data, &g);
  return g;
}

std::vector<double> ref_hvp(const RefNet& net, std::span<const double> theta, const RefData& data,
                            std::span<const double> v) {
  check(net, theta);
  std::vector<Dual> x(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) x[i] = Dual(theta[i], v[i]);
  std::vector<Dual> g;
  loss_and_grad<Dual>(net, std::span<const Dual>(x), data, &g);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i].d;
  return out;
}

RefAdaptation reference_maml(const RefNet& net, std::span<const double> theta, std::span<const RefTask> tasks,
                             std::size_t steps, std::span<const double> step) {
  check(net, theta);
  if (step.size() != 1 && step.size() != theta.size()) throw std::invalid_argument("reference_maml: bad step size");
  const std::size_t dim = theta.size();
  RefAdaptation r;
  r.theta_grad.assign(dim, 0.0);
  if (step.size() != 1) r.lr_grad.assign(dim, 0.0);
  const double inv_t = 1.0 / static_cast<double>(tasks.size());

  for (const auto& task : tasks) {
    std::vector<std::vector<double>> path{std::vector<double>(theta.begin(), theta.end())};
    std::vector<std::vector<double>> grads;
    for (std::size_t k = 0; k < steps; ++k) {
      grads.push_back(ref_gradient(net, path.back(), task.support));
      std::vector<double> next = path.back();
      for (std::size_t i = 0; i < dim; ++i) next[i] -= step_at(step, i) * grads.back()[i];
      path.push_back(std::move(next));
    }
    r.objective += inv_t * ref_loss(net, path.back(), task.query);

    // Reverse through theta_k = theta_{k-1} - a * g(theta_{k-1}).
    std::vector<double> adj = ref_gradient(net, path.back(), task.query);
    for (auto& a : adj) a *= inv_t;
    for (std::size_t k = steps; k-- > 0;) {
      std::vector<double> scaled(dim);
      for (std::size_t i = 0; i < dim; ++i) scaled[i] = step_at(step, i) * adj[i];
      if (!r.lr_grad.empty()) {
        for (std::size_t i = 0; i < dim; ++i) r.lr_grad[i] -= adj[i] * grads[k][i];
      }
      const auto hv = ref_hvp(net, path[k], task.support, scaled);
      for (std::size_t i = 0; i < dim; ++i) adj[i] -= hv[i];
    }
    for (std::size_t i = 0; i < dim; ++i) r.theta_grad[i] += adj[i];
    r.adapted.push_back(std::move(path.back()));
  }
  return r;
}

double reference_objective(const RefNet& net, std::span<const double> theta, std::span<const RefTask> tasks,
                           std::size_t steps, std::span<const double> step) {
  check(net, theta);
  double total = 0.0;
  for (const auto& task : tasks) {
    std::vector<double> p(theta.begin(), theta.end());
    for (std::size_t k = 0; k < steps; ++k) {
      const auto g = ref_gradient(net, p, task.support);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= step_at(step, i) * g[i];
    }
    total += ref_loss(net, p, task.query);
  }
  return total / static_cast<double>(tasks.size());
}

std::vector<double> reference_fd_meta_gradient(const RefNet& net, std::span<const double> theta,
                                               std::span<const RefTask> tasks, std::size_t steps,
                                               std::span<const double> step, double rel_eps) {
  return central_difference(
      [&](std::span<const double> x) { return reference_objective(net, x, tasks, steps, step); }, theta, rel_eps);
}

RefSharedResult reference_shared_objective(const RefNet& net, const RefSharedPoint& point,
                                           std::span<const RefTask> tasks, std::size_t steps, double eps_norm,
                                           const std::vector<std::vector<double>>* frozen) {
  check(net, point.theta);
  const std::size_t dim = point.theta.size();
  RefSharedResult r;
  std::vector<std::vector<double>> params(tasks.size(), point.theta);
  for (std::size_t k = 0; k < steps; ++k) {
    std::vector<std::vector<double>> grads;
    std::vector<double> sum(dim, 0.0);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      grads.push_back(ref_gradient(net, params[t], tasks[t].support));
      for (std::size_t i = 0; i < dim; ++i) sum[i] += grads.back()[i];
    }
    std::vector<double> g(dim);
    if (frozen) {
      g = (*frozen)[k];
    } else {
      double norm = 0.0;
      for (double v : sum) norm += v * v;
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < dim; ++i) g[i] = sum[i] / (norm + eps_norm);
    }
    std::vector<double> running = g;
    if (k < point.previous.size() && !point.previous[k].empty()) {
      const double s = 1.0 / (1.0 + std::exp(-point.momentum[k]));
      for (std::size_t i = 0; i < dim; ++i) running[i] = s * g[i] + (1.0 - s) * point.previous[k][i];
    }
    const double w = 1.0 / (1.0 + std::exp(-point.gate[k]));
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      for (std::size_t i = 0; i < dim; ++i) {
        params[t][i] -= step_at(point.step, i) * (w * running[i] + (1.0 - w) * grads[t][i]);
      }
    }
    r.shared.push_back(std::move(g));
    r.running.push_back(std::move(running));
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    r.objective += ref_loss(net, params[t], tasks[t].query) / static_cast<double>(tasks.size());
  }
  r.adapted = std::move(params);
  return r;
}

RefTrajectory reference_train(const RefNet& net, std::vector<double> theta, std::vector<double> step,
                              std::span<const std::vector<RefTask>> batches, std::size_t steps, const RefAdam& adam,
                              bool learn_step) {
  RefTrajectory out;
  std::vector<double> m1(theta.size(), 0.0), v1(theta.size(), 0.0);
  std::vector<double> m2(step.size(), 0.0), v2(step.size(), 0.0);
  int t = 0;
  auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                    const std::vector<double>& g) {
    const double c1 = 1.0 - std::pow(adam.beta1, t);
    const double c2 = 1.0 - std::pow(adam.beta2, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
      v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
      p[i] -= adam.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam.eps);
    }
  };
  for (const auto& batch : batches) {
    const auto r = reference_maml(net, theta, batch, steps, step);
    ++t;
    update(theta, m1, v1, r.theta_grad);
    if (learn_step && !r.lr_grad.empty()) update(step, m2, v2, r.lr_grad);
    out.theta.push_back(theta);
    out.step.push_back(step);
  }
  return out;
}

}  // namespace gradshare::oracle
