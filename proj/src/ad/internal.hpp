#pragma once

#include "gradshare/ad/graph.hpp"

namespace gradshare::ad::detail {

// Records a node. Inputs are kept only if the result requires a gradient.
NodePtr make_node(OpKind op, std::vector<NodePtr> inputs, Tensor value);

[[noreturn]] void shape_mismatch(std::string_view op, const Node& a, const Node& b);

}  // namespace gradshare::ad::detail
