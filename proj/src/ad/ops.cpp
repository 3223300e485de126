#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace gradshare::ad {

using detail::make_node;
using detail::shape_mismatch;

namespace {

Tensor map(const Tensor& x, auto&& f) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

Tensor zip(const Tensor& a, const Tensor& b, auto&& f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

void require_same(std::string_view op, const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_mismatch(op, *a.node(), *b.node());
}

void require_scalar(std::string_view op, const Var& s) {
  if (!s.value().is_scalar()) {
    throw ShapeError(std::string(op) + ": expected a 1x1 operand, got " + s.node()->describe());
  }
}

Var unary(OpKind op, const Var& x, Tensor value) { return Var(make_node(op, {x.node()}, std::move(value))); }

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < logits.cols(); ++c) mx = std::max(mx, logits(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - mx);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) /= z;
  }
  return out;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_mismatch("matmul", *a.node(), *b.node());
  Tensor out(x.rows(), y.cols());
  const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
  const double* xp = x.span().data();
  const double* yp = y.span().data();
  double* op = out.span().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = op + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = xp[i * k + p];
      if (xv == 0.0) continue;
      const double* yrow = yp + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += xv * yrow[j];
    }
  }
  return Var(make_node(OpKind::MatMul, {a.node(), b.node()}, std::move(out)));
}

Var transpose(const Var& x) {
  const Tensor& v = x.value();
  Tensor out(v.cols(), v.rows());
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c) out(c, r) = v(r, c);
  return unary(OpKind::Transpose, x, std::move(out));
}

Var operator+(const Var& a, const Var& b) {
  require_same("add", a, b);
  return Var(make_node(OpKind::Add, {a.node(), b.node()}, zip(a.value(), b.value(), std::plus<>{})));
}

Var operator-(const Var& a, const Var& b) {
  require_same("sub", a, b);
  return Var(make_node(OpKind::Sub, {a.node(), b.node()}, zip(a.value(), b.value(), std::minus<>{})));
}

Var operator*(const Var& a, const Var& b) {
  require_same("mul", a, b);
  return Var(make_node(OpKind::Mul, {a.node(), b.node()}, zip(a.value(), b.value(), std::multiplies<>{})));
}

Var scale(const Var& x, double c) { return affine(x, c, 0.0); }

Var affine(const Var& x, double a, double b) {
  auto n = make_node(OpKind::Affine, {x.node()}, map(x.value(), [a, b](double v) { return a * v + b; }));
  n->coef_a = a;
  n->coef_b = b;
  return Var(std::move(n));
}

Var scalar_mul(const Var& s, const Var& x) {
  require_scalar("scalar_mul", s);
  const double c = s.value()[0];
  return Var(make_node(OpKind::ScalarMul, {s.node(), x.node()}, map(x.value(), [c](double v) { return c * v; })));
}

Var add_row_broadcast(const Var& x, const Var& row) {
  const Tensor& v = x.value();
  const Tensor& r = row.value();
  if (r.rows() != 1 || r.cols() != v.cols()) shape_mismatch("add_row_broadcast", *x.node(), *row.node());
  Tensor out = v;
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, j) += r[j];
  return Var(make_node(OpKind::AddRowBroadcast, {x.node(), row.node()}, std::move(out)));
}

Var sum_rows(const Var& x) {
  const Tensor& v = x.value();
  Tensor out(1, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out[j] += v(i, j);
  return unary(OpKind::SumRows, x, std::move(out));
}

Var broadcast_rows(const Var& row, std::size_t rows) {
  const Tensor& r = row.value();
  if (r.rows() != 1) throw ShapeError("broadcast_rows: expected a single row, got " + row.node()->describe());
  Tensor out(rows, r.cols());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) out(i, j) = r[j];
  auto n = make_node(OpKind::BroadcastRows, {row.node()}, std::move(out));
  n->out_rows = rows;
  return Var(std::move(n));
}

Var row_sum(const Var& x) {
  const Tensor& v = x.value();
  Tensor out(v.rows(), 1);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out[i] += v(i, j);
  return unary(OpKind::RowSum, x, std::move(out));
}

Var broadcast_cols(const Var& col, std::size_t cols) {
  const Tensor& c = col.value();
  if (c.cols() != 1) throw ShapeError("broadcast_cols: expected a single column, got " + col.node()->describe());
  Tensor out(c.rows(), cols);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = c[i];
  auto n = make_node(OpKind::BroadcastCols, {col.node()}, std::move(out));
  n->out_cols = cols;
  return Var(std::move(n));
}

Var fill(const Var& s, std::size_t rows, std::size_t cols) {
  require_scalar("fill", s);
  auto n = make_node(OpKind::Fill, {s.node()}, Tensor(rows, cols, s.value()[0]));
  n->out_rows = rows;
  n->out_cols = cols;
  return Var(std::move(n));
}

Var tanh(const Var& x) { return unary(OpKind::Tanh, x, map(x.value(), [](double v) { return std::tanh(v); })); }

Var relu(const Var& x) {
  return unary(OpKind::Relu, x, map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}

Var sigmoid(const Var& x) {
  return unary(OpKind::Sigmoid, x, map(x.value(), [](double v) {
                 // Split by sign so exp never overflows.
                 if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               }));
}

Var exp(const Var& x) { return unary(OpKind::Exp, x, map(x.value(), [](double v) { return std::exp(v); })); }

Var log(const Var& x) { return unary(OpKind::Log, x, map(x.value(), [](double v) { return std::log(v); })); }

Var reciprocal(const Var& x) {
  return unary(OpKind::Reciprocal, x, map(x.value(), [](double v) { return v == 0.0 ? 0.0 : 1.0 / v; }));
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return unary(OpKind::Sum, x, Tensor::scalar(s));
}

Var mean(const Var& x) {
  if (x.value().size() == 0) throw ShapeError("mean: empty operand " + x.node()->describe());
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return unary(OpKind::Mean, x, Tensor::scalar(s / static_cast<double>(x.value().size())));
}

Var norm2(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v * v;
  return unary(OpKind::Norm2, x, Tensor::scalar(std::sqrt(s)));
}

Var softmax(const Var& logits) { return unary(OpKind::Softmax, logits, softmax_rows(logits.value())); }

Var softmax_cross_entropy(const Var& logits, const Tensor& labels) {
  const Tensor& z = logits.value();
  if (labels.rows() != z.rows() || labels.cols() != 1 || z.rows() == 0) {
    throw ShapeError("softmax_cross_entropy: labels [" + labels.shape_string() + "] do not match logits " +
                     logits.node()->describe());
  }
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const double lbl = labels[r];
    if (lbl < 0.0 || lbl >= static_cast<double>(z.cols()) || lbl != std::floor(lbl)) {
      throw ShapeError("softmax_cross_entropy: label " + std::to_string(lbl) + " out of range for " +
                       logits.node()->describe());
    }
    double mx = -INFINITY;
    for (std::size_t c = 0; c < z.cols(); ++c) mx = std::max(mx, z(r, c));
    double acc = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) acc += std::exp(z(r, c) - mx);
    total += mx + std::log(acc) - z(r, static_cast<std::size_t>(lbl));
  }
  auto n = make_node(OpKind::SoftmaxCrossEntropy, {logits.node()},
                     Tensor::scalar(total / static_cast<double>(z.rows())));
  n->aux = labels;
  return Var(std::move(n));
}

Var mean_squared_error(const Var& pred, const Tensor& target) {
  const Tensor& p = pred.value();
  if (!p.same_shape(target) || p.size() == 0) {
    throw ShapeError("mean_squared_error: target [" + target.shape_string() + "] does not match prediction " +
                     pred.node()->describe());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - target[i]) * (p[i] - target[i]);
  auto n = make_node(OpKind::MeanSquaredError, {pred.node()}, Tensor::scalar(s / static_cast<double>(p.size())));
  n->aux = target;
  return Var(std::move(n));
}

Var slice(const Var& x, std::size_t offset, std::size_t rows, std::size_t cols) {
  const Tensor& v = x.value();
  if (offset + rows * cols > v.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + rows * cols) +
                     ") exceeds " + x.node()->describe());
  }
  std::vector<double> data(v.values().begin() + static_cast<std::ptrdiff_t>(offset),
                           v.values().begin() + static_cast<std::ptrdiff_t>(offset + rows * cols));
  auto n = make_node(OpKind::Slice, {x.node()}, Tensor(rows, cols, std::move(data)));
  n->offset = offset;
  return Var(std::move(n));
}

Var scatter(const Var& x, std::size_t offset, std::size_t rows, std::size_t cols) {
  const Tensor& v = x.value();
  if (offset + v.size() > rows * cols) {
    throw ShapeError("scatter: " + x.node()->describe() + " at offset " + std::to_string(offset) +
                     " does not fit in " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor out(rows, cols);
  std::copy(v.values().begin(), v.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(offset));
  auto n = make_node(OpKind::Scatter, {x.node()}, std::move(out));
  n->offset = offset;
  n->out_rows = rows;
  n->out_cols = cols;
  return Var(std::move(n));
}

Var argmax_rows(const Var& x) {
  const Tensor& v = x.value();
  Tensor out(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < v.cols(); ++c) {
      if (v(r, c) > v(r, best)) best = c;
    }
    out[r] = static_cast<double>(best);
  }
  return unary(OpKind::ArgmaxRows, x, std::move(out));
}

}  // namespace gradshare::ad
