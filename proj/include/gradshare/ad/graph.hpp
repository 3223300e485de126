#pragma once

// Define-by-run reverse-mode autodiff. Values are computed eagerly when a node
// is built; grad() walks the recorded graph backwards. With create_graph set,
// the backward pass is itself recorded, so gradients can be differentiated again.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gradshare/ad/tensor.hpp"

namespace gradshare::ad {

enum class OpKind : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Transpose,
  Add,
  Sub,
  Mul,
  Affine,
  ScalarMul,
  AddRowBroadcast,
  SumRows,
  BroadcastRows,
  RowSum,
  BroadcastCols,
  Fill,
  Tanh,
  Relu,
  Sigmoid,
  Exp,
  Log,
  Reciprocal,
  Sum,
  Mean,
  Norm2,
  Softmax,
  SoftmaxCrossEntropy,
  MeanSquaredError,
  Slice,
  Scatter,
  ArgmaxRows,
};

std::string_view op_name(OpKind op) noexcept;

/// Incompatible operand shapes; the message names both nodes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Gradient requested through something that has no derivative, or of a non-scalar root.
class DifferentiationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  OpKind op = OpKind::Constant;
  std::vector<NodePtr> inputs;
  Tensor value;
  bool requires_grad = false;
  // Op attributes: affine coefficients, slice/scatter/fill geometry.
  double coef_a = 0.0;
  double coef_b = 0.0;
  std::size_t offset = 0;
  std::size_t out_rows = 0;
  std::size_t out_cols = 0;
  // Constant side data: class labels, regression targets, relu masks.
  Tensor aux;
  std::string label;
  std::uint64_t id = 0;

  Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  // Releases long input chains iteratively so deep graphs cannot overflow the stack.
  ~Node();

  std::string describe() const;
};

// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  std::uint64_t id() const { return node_->id; }
  OpKind op() const { return node_->op; }
  const NodePtr& node() const noexcept { return node_; }
  explicit operator bool() const noexcept { return static_cast<bool>(node_); }

 private:
  NodePtr node_;
};

/// True unless a NoGradGuard is active on this thread.
bool grad_enabled() noexcept;

// While alive, new nodes on this thread are recorded as constants.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var leaf(Tensor value, std::string label = {});
Var constant(Tensor value, std::string label = {});
/// Same value, no gradient path.
Var detach(const Var& x);
/// Forward value of a node. Evaluation happens at construction, so this is a read.
const Tensor& eval(const Var& x);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
/// Elementwise product.
Var operator*(const Var& a, const Var& b);
Var scale(const Var& x, double c);
/// a * x + b elementwise.
Var affine(const Var& x, double a, double b);
/// 1 x 1 node times any tensor.
Var scalar_mul(const Var& s, const Var& x);
/// x (n x c) plus a 1 x c row added to every row.
Var add_row_broadcast(const Var& x, const Var& row);
Var sum_rows(const Var& x);
Var broadcast_rows(const Var& row, std::size_t rows);
Var row_sum(const Var& x);
Var broadcast_cols(const Var& col, std::size_t cols);
/// 1 x 1 node broadcast to rows x cols.
Var fill(const Var& s, std::size_t rows, std::size_t cols);
Var tanh(const Var& x);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
/// 1 / x, with 1 / 0 defined as 0 (and zero derivative there).
Var reciprocal(const Var& x);
Var sum(const Var& x);
Var mean(const Var& x);
/// Euclidean norm over all entries; its gradient at 0 is the zero subgradient.
Var norm2(const Var& x);
/// Row-wise softmax.
Var softmax(const Var& logits);
/// Mean over rows of -log softmax(logits)[label]; labels is n x 1 of class indices.
Var softmax_cross_entropy(const Var& logits, const Tensor& labels);
/// Mean over all entries of (pred - target)^2.
Var mean_squared_error(const Var& pred, const Tensor& target);
/// rows x cols view of the flat entries [offset, offset + rows * cols).
Var slice(const Var& x, std::size_t offset, std::size_t rows, std::size_t cols);
/// Zero tensor of rows x cols with x's flat entries written at offset.
Var scatter(const Var& x, std::size_t offset, std::size_t rows, std::size_t cols);
/// Column index of each row's maximum. Not differentiable.
Var argmax_rows(const Var& x);

/// Gradients keyed by the requested nodes, in request order. Every requested
/// node has an entry; nodes the root does not depend on get explicit zeros.
class GradMap {
 public:
  GradMap() = default;
  GradMap(std::vector<std::uint64_t> ids, std::vector<Var> grads) : ids_(std::move(ids)), grads_(std::move(grads)) {}

  std::size_t size() const noexcept { return grads_.size(); }
  const Var& operator[](std::size_t i) const { return grads_.at(i); }
  const Var& at(const Var& leaf) const;
  const std::vector<Var>& all() const noexcept { return grads_; }

 private:
  std::vector<std::uint64_t> ids_;
  std::vector<Var> grads_;
};

/// d root / d wrt for a 1 x 1 root. With create_graph the returned gradients are
/// graph nodes that can be differentiated again.
GradMap grad(const Var& root, std::span<const Var> wrt, bool create_graph = false);
GradMap grad(const Var& root, std::initializer_list<Var> wrt, bool create_graph = false);

}  // namespace gradshare::ad
