#include <atomic>

#include "internal.hpp"

namespace gradshare::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool t_grad_enabled = true;

}  // namespace

std::string_view op_name(OpKind op) noexcept {
  switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Affine: return "affine";
    case OpKind::ScalarMul: return "scalar_mul";
    case OpKind::AddRowBroadcast: return "add_row_broadcast";
    case OpKind::SumRows: return "sum_rows";
    case OpKind::BroadcastRows: return "broadcast_rows";
    case OpKind::RowSum: return "row_sum";
    case OpKind::BroadcastCols: return "broadcast_cols";
    case OpKind::Fill: return "fill";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Reciprocal: return "reciprocal";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Norm2: return "norm2";
    case OpKind::Softmax: return "softmax";
    case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::MeanSquaredError: return "mean_squared_error";
    case OpKind::Slice: return "slice";
    case OpKind::Scatter: return "scatter";
    case OpKind::ArgmaxRows: return "argmax_rows";
  }
  return "unknown";
}

Node::Node() : id(g_next_id.fetch_add(1, std::memory_order_relaxed)) {}

Node::~Node() {
  std::vector<NodePtr> pending = std::move(inputs);
  while (!pending.empty()) {
    NodePtr n = std::move(pending.back());
    pending.pop_back();
    if (n && n.use_count() == 1) {
      for (auto& in : n->inputs) pending.push_back(std::move(in));
      n->inputs.clear();
    }
  }
}

std::string Node::describe() const {
  std::string s = "#" + std::to_string(id) + " " + std::string(op_name(op));
  if (!label.empty()) s += " '" + label + "'";
  s += " [" + value.shape_string() + "]";
  return s;
}

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() noexcept : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace detail {

NodePtr make_node(OpKind op, std::vector<NodePtr> inputs, Tensor value) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = std::move(value);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  n->requires_grad = needs;
  if (needs) n->inputs = std::move(inputs);
  return n;
}

void shape_mismatch(std::string_view op, const Node& a, const Node& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes between " + a.describe() + " and " + b.describe());
}

}  // namespace detail

Var leaf(Tensor value, std::string label) {
  auto n = std::make_shared<Node>();
  n->op = OpKind::Leaf;
  n->value = std::move(value);
  n->requires_grad = true;
  n->label = std::move(label);
  return Var(std::move(n));
}

Var constant(Tensor value, std::string label) {
  auto n = std::make_shared<Node>();
  n->op = OpKind::Constant;
  n->value = std::move(value);
  n->label = std::move(label);
  return Var(std::move(n));
}

Var detach(const Var& x) { return constant(x.value(), x.node()->label); }

const Tensor& eval(const Var& x) { return x.value(); }

const Var& GradMap::at(const Var& leaf) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == leaf.id()) return grads_[i];
  }
  throw std::out_of_range("GradMap: node " + leaf.node()->describe() + " was not requested");
}

}  // namespace gradshare::ad
