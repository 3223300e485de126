#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "internal.hpp"

namespace gradshare::ad {

namespace {

Tensor one_hot(const Tensor& labels, std::size_t classes) {
  Tensor out(labels.rows(), classes);
  for (std::size_t r = 0; r < labels.rows(); ++r) out(r, static_cast<std::size_t>(labels[r])) = 1.0;
  return out;
}

// Adjoints of n's inputs given the adjoint g of n. Only entries with need[i] are filled.
void backward(const NodePtr& n, const Var& g, const std::vector<bool>& need, std::vector<Var>& out) {
  const Var self(n);
  auto in = [&](std::size_t i) { return Var(n->inputs[i]); };
  switch (n->op) {
    case OpKind::Leaf:
    case OpKind::Constant:
      return;
    case OpKind::MatMul:
      if (need[0]) out[0] = matmul(g, transpose(in(1)));
      if (need[1]) out[1] = matmul(transpose(in(0)), g);
      return;
    case OpKind::Transpose:
      out[0] = transpose(g);
      return;
    case OpKind::Add:
      if (need[0]) out[0] = g;
      if (need[1]) out[1] = g;
      return;
    case OpKind::Sub:
      if (need[0]) out[0] = g;
      if (need[1]) out[1] = scale(g, -1.0);
      return;
    case OpKind::Mul:
      if (need[0]) out[0] = g * in(1);
      if (need[1]) out[1] = g * in(0);
      return;
    case OpKind::Affine:
      out[0] = scale(g, n->coef_a);
      return;
    case OpKind::ScalarMul:
      if (need[0]) out[0] = sum(g * in(1));
      if (need[1]) out[1] = scalar_mul(in(0), g);
      return;
    case OpKind::AddRowBroadcast:
      if (need[0]) out[0] = g;
      if (need[1]) out[1] = sum_rows(g);
      return;
    case OpKind::SumRows:
      out[0] = broadcast_rows(g, n->inputs[0]->value.rows());
      return;
    case OpKind::BroadcastRows:
      out[0] = sum_rows(g);
      return;
    case OpKind::RowSum:
      out[0] = broadcast_cols(g, n->inputs[0]->value.cols());
      return;
    case OpKind::BroadcastCols:
      out[0] = row_sum(g);
      return;
    case OpKind::Fill:
      out[0] = sum(g);
      return;
    case OpKind::Tanh:
      out[0] = g * affine(self * self, -1.0, 1.0);
      return;
    case OpKind::Relu: {
      const Tensor& x = n->inputs[0]->value;
      Tensor mask(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) mask[i] = x[i] > 0.0 ? 1.0 : 0.0;
      out[0] = g * constant(std::move(mask));
      return;
    }
    case OpKind::Sigmoid:
      out[0] = g * (self * affine(self, -1.0, 1.0));
      return;
    case OpKind::Exp:
      out[0] = g * self;
      return;
    case OpKind::Log:
      out[0] = g * reciprocal(in(0));
      return;
    case OpKind::Reciprocal:
      out[0] = g * affine(self * self, -1.0, 0.0);
      return;
    case OpKind::Sum: {
      const Tensor& x = n->inputs[0]->value;
      out[0] = fill(g, x.rows(), x.cols());
      return;
    }
    case OpKind::Mean: {
      const Tensor& x = n->inputs[0]->value;
      out[0] = fill(scale(g, 1.0 / static_cast<double>(x.size())), x.rows(), x.cols());
      return;
    }
    case OpKind::Norm2:
      out[0] = scalar_mul(g * reciprocal(self), in(0));
      return;
    case OpKind::Softmax:
      out[0] = self * (g - broadcast_cols(row_sum(g * self), self.cols()));
      return;
    case OpKind::SoftmaxCrossEntropy: {
      const Var logits = in(0);
      const double inv_n = 1.0 / static_cast<double>(logits.rows());
      out[0] = scalar_mul(g, scale(softmax(logits) - constant(one_hot(n->aux, logits.cols())), inv_n));
      return;
    }
    case OpKind::MeanSquaredError: {
      const Var pred = in(0);
      out[0] = scalar_mul(g, scale(pred - constant(n->aux), 2.0 / static_cast<double>(pred.value().size())));
      return;
    }
    case OpKind::Slice: {
      const Tensor& x = n->inputs[0]->value;
      out[0] = scatter(g, n->offset, x.rows(), x.cols());
      return;
    }
    case OpKind::Scatter: {
      const Tensor& x = n->inputs[0]->value;
      out[0] = slice(g, n->offset, x.rows(), x.cols());
      return;
    }
    case OpKind::ArgmaxRows:
      break;
  }
  throw DifferentiationError("primitive '" + std::string(op_name(n->op)) + "' is not differentiable (node " +
                             n->describe() + ")");
}

}  // namespace

GradMap grad(const Var& root, std::initializer_list<Var> wrt, bool create_graph) {
  return grad(root, std::span<const Var>(wrt.begin(), wrt.size()), create_graph);
}

GradMap grad(const Var& root, std::span<const Var> wrt, bool create_graph) {
  if (!root) throw DifferentiationError("grad: empty root");
  if (!root.value().is_scalar()) {
    throw DifferentiationError("grad: root must be 1x1, got " + root.node()->describe());
  }

  std::unordered_set<const Node*> targets;
  for (const auto& w : wrt) targets.insert(w.node().get());

  // Iterative post-order over requires-grad nodes; marks which ones lead to a target.
  std::vector<NodePtr> order;
  std::unordered_map<const Node*, bool> reaches;
  if (root.requires_grad() || targets.count(root.node().get())) {
    std::vector<std::pair<NodePtr, std::size_t>> stack{{root.node(), 0}};
    reaches.emplace(root.node().get(), false);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        const NodePtr& child = node->inputs[next++];
        if (child->requires_grad && !reaches.count(child.get())) {
          reaches.emplace(child.get(), false);
          stack.emplace_back(child, 0);
        }
        continue;
      }
      bool r = targets.count(node.get()) != 0;
      for (const auto& c : node->inputs) {
        auto it = reaches.find(c.get());
        if (it != reaches.end() && it->second) r = true;
      }
      reaches[node.get()] = r;
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::vector<Var> results;
  std::vector<std::uint64_t> ids;
  {
    std::optional<NoGradGuard> guard;
    if (!create_graph) guard.emplace();

    std::unordered_map<const Node*, Var> adjoint;
    adjoint.emplace(root.node().get(), constant(Tensor::scalar(1.0)));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodePtr& node = *it;
      if (!reaches[node.get()]) continue;
      auto adj = adjoint.find(node.get());
      if (adj == adjoint.end()) continue;
      if (node->inputs.empty()) continue;

      std::vector<bool> need(node->inputs.size());
      bool any = false;
      for (std::size_t i = 0; i < need.size(); ++i) {
        const Node* c = node->inputs[i].get();
        auto r = reaches.find(c);
        need[i] = c->requires_grad && r != reaches.end() && r->second;
        any = any || need[i];
      }
      if (!any) continue;

      std::vector<Var> contrib(node->inputs.size());
      backward(node, adj->second, need, contrib);
      for (std::size_t i = 0; i < contrib.size(); ++i) {
        if (!need[i] || !contrib[i]) continue;
        const Node* c = node->inputs[i].get();
        auto existing = adjoint.find(c);
        if (existing == adjoint.end()) {
          adjoint.emplace(c, contrib[i]);
        } else {
          existing->second = existing->second + contrib[i];
        }
      }
    }

    results.reserve(wrt.size());
    for (const auto& w : wrt) {
      ids.push_back(w.id());
      auto a = adjoint.find(w.node().get());
      if (a != adjoint.end()) {
        results.push_back(a->second);
      } else {
        results.push_back(constant(Tensor(w.rows(), w.cols())));
      }
    }
  }
  return GradMap(std::move(ids), std::move(results));
}

}  // namespace gradshare::ad
