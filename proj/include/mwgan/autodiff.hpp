#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mwgan/rng.hpp"
#include "mwgan/tensor.hpp"

namespace mwgan {

// Reverse-mode differentiation on an eagerly evaluated DAG. Each op computes
// its value on construction and records a closure that scatters the node's
// adjoint into its parents. backward() zeroes every adjoint reachable from
// the root, seeds the root with 1 and walks the graph once in reverse
// topological order, so calling it repeatedly gives identical results.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor adjoint;  // same shape as value, accumulated by backward()
  std::vector<NodePtr> parents;
  std::function<void(const Node&)> backprop;  // may be empty (leaf)
  const char* op = "leaf";

  Node() = default;
  explicit Node(Tensor v) : value(std::move(v)), adjoint(value.shape) {}
};

/// Leaf node with no parents. Used for inputs, parameters and constants.
NodePtr make_leaf(Tensor value, const char* op = "leaf");

/// Copies a node's value into a fresh leaf, cutting all gradient flow.
NodePtr detach(const NodePtr& x);

// Elementwise sum. Shapes must match exactly, or b's shape must be a trailing
// suffix of a's (covers scalar and per-channel bias broadcasts; general
// broadcasting is deliberately not supported).
NodePtr add(const NodePtr& a, const NodePtr& b);

/// Elementwise product. Shapes must match exactly, or b must be a scalar.
NodePtr mul(const NodePtr& a, const NodePtr& b);

/// 2-D matrix product (n x k) * (k x m).
NodePtr matmul(const NodePtr& a, const NodePtr& b);

// Multi-channel 1-D convolution over the position axis with zero same-padding
// (split evenly, extra cell on the right for even widths), so the output keeps
// the input's sequence length. x: b x l x c_in, w: c_out x c_in x k,
// bias: {c_out} or null.
NodePtr conv1d(const NodePtr& x, const NodePtr& w, const NodePtr& bias);

NodePtr leaky_relu(const NodePtr& x, real negative_slope);

/// Binary mask scaled by 1/(1-rate). In eval mode (train=false) or at rate 0
/// the mask is all ones. rate must be in [0, 1).
Tensor dropout_mask(const Shape& shape, real rate, Rng& rng, bool train = true);

/// Multiplies x by a freshly drawn dropout mask; identity when train=false.
NodePtr dropout(const NodePtr& x, real rate, Rng& rng, bool train);

/// Softmax along one axis; output is nonnegative and sums to 1 on that axis.
NodePtr softmax_axis(const NodePtr& x, std::size_t axis);

/// Mean over all elements, returned as a rank-0 scalar node.
NodePtr mean(const NodePtr& x);

/// Elementwise integer power, exponent >= 1.
NodePtr power_int(const NodePtr& x, int exponent);

NodePtr abs_val(const NodePtr& x);

/// 2-D transpose.
NodePtr transpose(const NodePtr& x);

NodePtr reshape(const NodePtr& x, Shape new_shape);

// Composites built from the ops above.
NodePtr scale(const NodePtr& x, real c);
NodePtr sub(const NodePtr& a, const NodePtr& b);

/// Reverse topological order of the subgraph reachable from root (root last).
std::vector<Node*> topo_order(const NodePtr& root);

/// Reverse-mode sweep from a scalar root. After the call every reachable
/// node's adjoint holds d root / d node.
void backward(const NodePtr& root);

}  // namespace mwgan
