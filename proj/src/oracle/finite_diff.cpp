#include "gradshare/oracle/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gradshare::oracle {

namespace {

double checked(const Objective& f, std::span<const double> x, std::size_t coord) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw OracleError("finite differences: objective is non-finite near coordinate " + std::to_string(coord));
  }
  return v;
}

template <typename StepFn>
std::vector<double> differences(const Objective& f, std::span<const double> x0, StepFn step) {
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    const double h = step(orig);
    x[i] = orig + h;
    const double up = checked(f, x, i);
    x[i] = orig - h;
    const double down = checked(f, x, i);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void append(std::vector<double>& out, const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); }

}  // namespace

std::vector<double> central_difference(const Objective& f, std::span<const double> x, double rel_eps) {
  return differences(f, x, [rel_eps](double v) { return std::max(std::abs(v), 1.0) * rel_eps; });
}

std::vector<double> central_difference_abs(const Objective& f, std::span<const double> x, double h) {
  return differences(f, x, [h](double) { return h; });
}

std::vector<double> MetaPoint::flatten() const {
  std::vector<double> out;
  append(out, theta);
  append(out, inner_lr);
  append(out, momentum);
  append(out, gate);
  return out;
}

MetaPoint MetaPoint::unflatten(std::span<const double> flat, const MetaPoint& shape) {
  MetaPoint p;
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    std::vector<double> v(flat.begin() + static_cast<std::ptrdiff_t>(at),
                          flat.begin() + static_cast<std::ptrdiff_t>(at + n));
    at += n;
    return v;
  };
  p.theta = take(shape.theta.size());
  p.inner_lr = take(shape.inner_lr.size());
  p.momentum = take(shape.momentum.size());
  p.gate = take(shape.gate.size());
  return p;
}

MetaPoint finite_diff_meta_gradient(const std::function<double(const MetaPoint&)>& objective, const MetaPoint& point,
                                    double rel_eps) {
  const auto flat = point.flatten();
  auto g = central_difference([&](std::span<const double> x) { return objective(MetaPoint::unflatten(x, point)); },
                              flat, rel_eps);
  return MetaPoint::unflatten(g, point);
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw OracleError("relative_error: length mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, floor);
}

}  // namespace gradshare::oracle
