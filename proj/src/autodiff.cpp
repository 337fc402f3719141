#include "mwgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

namespace mwgan {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                              " vs " + shape_str(b.shape));
}

void check_finite(const char* op, const Tensor& t) {
  if (!t.all_finite()) {
    throw std::runtime_error(std::string(op) + ": non-finite output");
  }
}

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> parents,
                  std::function<void(const Node&)> backprop) {
  check_finite(op, value);
  auto n = std::make_shared<Node>(std::move(value));
  n->op = op;
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  return n;
}

// True when small's shape equals the trailing dims of big's shape.
bool is_suffix_shape(const Tensor& big, const Tensor& small) {
  if (small.rank() > big.rank()) return false;
  const std::size_t off = big.rank() - small.rank();
  for (std::size_t i = 0; i < small.rank(); ++i) {
    if (big.shape[off + i] != small.shape[i]) return false;
  }
  return true;
}

}  // namespace

NodePtr make_leaf(Tensor value, const char* op) {
  check_finite(op, value);
  auto n = std::make_shared<Node>(std::move(value));
  n->op = op;
  return n;
}

NodePtr detach(const NodePtr& x) { return make_leaf(x->value, "detach"); }

NodePtr add(const NodePtr& a, const NodePtr& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  Tensor out = av;
  if (av.shape == bv.shape) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return make_node("add", std::move(out), {a, b}, [a, b](const Node& n) {
      for (std::size_t i = 0; i < n.adjoint.size(); ++i) {
        a->adjoint[i] += n.adjoint[i];
        b->adjoint[i] += n.adjoint[i];
      }
    });
  }
  if (is_suffix_shape(av, bv)) {
    const std::size_t span = bv.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % span];
    return make_node("add", std::move(out), {a, b}, [a, b, span](const Node& n) {
      for (std::size_t i = 0; i < n.adjoint.size(); ++i) {
        a->adjoint[i] += n.adjoint[i];
        b->adjoint[i % span] += n.adjoint[i];
      }
    });
  }
  shape_error("add", av, bv);
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.shape == bv.shape) {
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return make_node("mul", std::move(out), {a, b}, [a, b](const Node& n) {
      for (std::size_t i = 0; i < n.adjoint.size(); ++i) {
        a->adjoint[i] += n.adjoint[i] * b->value[i];
        b->adjoint[i] += n.adjoint[i] * a->value[i];
      }
    });
  }
  if (bv.size() == 1) {
    const real s = bv[0];
    Tensor out = av;
    for (real& v : out.data) v *= s;
    return make_node("mul", std::move(out), {a, b}, [a, b, s](const Node& n) {
      real acc = 0;
      for (std::size_t i = 0; i < n.adjoint.size(); ++i) {
        a->adjoint[i] += n.adjoint[i] * s;
        acc += n.adjoint[i] * a->value[i];
      }
      b->adjoint[0] += acc;
    });
  }
  shape_error("mul", av, bv);
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0]) {
    shape_error("matmul", av, bv);
  }
  const std::size_t n = av.shape[0], k = av.shape[1], m = bv.shape[1];
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const real x = av.data[i * k + p];
      if (x == 0) continue;
      const real* brow = &bv.data[p * m];
      real* orow = &out.data[i * m];
      for (std::size_t j = 0; j < m; ++j) orow[j] += x * brow[j];
    }
  }
  return make_node("matmul", std::move(out), {a, b}, [a, b, n, k, m](const Node& nd) {
    // dA = G * B^T, dB = A^T * G
    for (std::size_t i = 0; i < n; ++i) {
      const real* grow = &nd.adjoint.data[i * m];
      for (std::size_t p = 0; p < k; ++p) {
        const real* brow = &b->value.data[p * m];
        real acc = 0;
        for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
        a->adjoint.data[i * k + p] += acc;
      }
      const real* arow = &a->value.data[i * k];
      for (std::size_t p = 0; p < k; ++p) {
        const real x = arow[p];
        if (x == 0) continue;
        real* brow = &b->adjoint.data[p * m];
        for (std::size_t j = 0; j < m; ++j) brow[j] += x * grow[j];
      }
    }
  });
}

NodePtr conv1d(const NodePtr& x, const NodePtr& w, const NodePtr& bias) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.rank() != 3 || wv.rank() != 3 || xv.shape[2] != wv.shape[1]) {
    shape_error("conv1d", xv, wv);
  }
  const std::size_t batch = xv.shape[0], len = xv.shape[1], cin = xv.shape[2];
  const std::size_t cout = wv.shape[0], k = wv.shape[2];
  if (bias && (bias->value.rank() != 1 || bias->value.shape[0] != cout)) {
    shape_error("conv1d bias", wv, bias->value);
  }
  const std::size_t pad_left = (k - 1) / 2;

  Tensor out({batch, len, cout});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < len; ++p) {
      real* orow = &out.data[(b * len + p) * cout];
      if (bias) {
        for (std::size_t co = 0; co < cout; ++co) orow[co] = bias->value[co];
      }
      for (std::size_t dk = 0; dk < k; ++dk) {
        const std::size_t q = p + dk;
        if (q < pad_left || q - pad_left >= len) continue;
        const real* xrow = &xv.data[(b * len + (q - pad_left)) * cin];
        for (std::size_t co = 0; co < cout; ++co) {
          const real* wrow = &wv.data[(co * cin) * k + dk];
          real acc = 0;
          for (std::size_t ci = 0; ci < cin; ++ci) acc += xrow[ci] * wrow[ci * k];
          orow[co] += acc;
        }
      }
    }
  }

  std::vector<NodePtr> parents = {x, w};
  if (bias) parents.push_back(bias);
  return make_node(
      "conv1d", std::move(out), std::move(parents),
      [x, w, bias, batch, len, cin, cout, k, pad_left](const Node& n) {
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < len; ++p) {
            const real* grow = &n.adjoint.data[(b * len + p) * cout];
            if (bias) {
              for (std::size_t co = 0; co < cout; ++co) bias->adjoint[co] += grow[co];
            }
            for (std::size_t dk = 0; dk < k; ++dk) {
              const std::size_t q = p + dk;
              if (q < pad_left || q - pad_left >= len) continue;
              const std::size_t xoff = (b * len + (q - pad_left)) * cin;
              for (std::size_t co = 0; co < cout; ++co) {
                const real g = grow[co];
                if (g == 0) continue;
                const real* wrow = &w->value.data[(co * cin) * k + dk];
                real* wgrow = &w->adjoint.data[(co * cin) * k + dk];
                for (std::size_t ci = 0; ci < cin; ++ci) {
                  x->adjoint.data[xoff + ci] += g * wrow[ci * k];
                  wgrow[ci * k] += g * x->value.data[xoff + ci];
                }
              }
            }
          }
        }
      });
}

NodePtr leaky_relu(const NodePtr& x, real negative_slope) {
  Tensor out = x->value;
  for (real& v : out.data) {
    if (v < 0) v *= negative_slope;
  }
  return make_node("leaky_relu", std::move(out), {x}, [x, negative_slope](const Node& n) {
    for (std::size_t i = 0; i < n.adjoint.size(); ++i) {
      x->adjoint[i] += n.adjoint[i] * (x->value[i] > 0 ? real(1) : negative_slope);
    }
  });
}

Tensor dropout_mask(const Shape& shape, real rate, Rng& rng, bool train) {
  if (!(rate >= 0 && rate < 1)) {
    throw std::invalid_argument("dropout_mask: rate must be in [0,1), got " +
                                std::to_string(rate));
  }
  if (!train || rate == 0) return Tensor(shape, real(1));
  Tensor mask(shape);
  const real keep_scale = real(1) / (real(1) - rate);
  for (real& v : mask.data) {
    v = rng.uniform01() < rate ? real(0) : keep_scale;
  }
  return mask;
}

NodePtr dropout(const NodePtr& x, real rate, Rng& rng, bool train) {
  if (!(rate >= 0 && rate < 1)) {
    throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  if (!train || rate == 0) return x;
  Tensor mask = dropout_mask(x->value.shape, rate, rng, true);
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_node("dropout", std::move(out), {x},
                   [x, mask = std::move(mask)](const Node& n) {
                     for (std::size_t i = 0; i < n.adjoint.size(); ++i) {
                       x->adjoint[i] += n.adjoint[i] * mask[i];
                     }
                   });
}

NodePtr softmax_axis(const NodePtr& x, std::size_t axis) {
  const Tensor& xv = x->value;
  if (axis >= xv.rank()) {
    throw std::invalid_argument("softmax_axis: axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(xv.shape));
  }
  const std::size_t n = xv.shape[axis];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.shape[i];
  std::size_t outer = xv.size() / (n * inner);

  Tensor out(xv.shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      real mx = xv[base];
      for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xv[base + i * inner]);
      real sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const real e = std::exp(xv[base + i * inner] - mx);
        out[base + i * inner] = e;
        sum += e;
      }
      for (std::size_t i = 0; i < n; ++i) out[base + i * inner] /= sum;
    }
  }
  return make_node("softmax_axis", std::move(out), {x},
                   [x, n, inner, outer](const Node& nd) {
                     for (std::size_t o = 0; o < outer; ++o) {
                       for (std::size_t in = 0; in < inner; ++in) {
                         const std::size_t base = o * n * inner + in;
                         real dot = 0;
                         for (std::size_t i = 0; i < n; ++i) {
                           dot += nd.adjoint[base + i * inner] * nd.value[base + i * inner];
                         }
                         for (std::size_t i = 0; i < n; ++i) {
                           const std::size_t idx = base + i * inner;
                           x->adjoint[idx] += nd.value[idx] * (nd.adjoint[idx] - dot);
                         }
                       }
                     }
                   });
}

NodePtr mean(const NodePtr& x) {
  const std::size_t n = x->value.size();
  if (n == 0) throw std::invalid_argument("mean: empty input");
  real acc = 0;
  for (real v : x->value.data) acc += v;
  Tensor out = Tensor::scalar(acc / static_cast<real>(n));
  return make_node("mean", std::move(out), {x}, [x, n](const Node& nd) {
    const real g = nd.adjoint[0] / static_cast<real>(n);
    for (std::size_t i = 0; i < n; ++i) x->adjoint[i] += g;
  });
}

NodePtr power_int(const NodePtr& x, int exponent) {
  if (exponent < 1) {
    throw std::invalid_argument("power_int: exponent must be >= 1, got " +
                                std::to_string(exponent));
  }
  Tensor out(x->value.shape, real(1));
  for (int e = 0; e < exponent; ++e) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= x->value[i];
  }
  return make_node("power_int", std::move(out), {x}, [x, exponent](const Node& nd) {
    for (std::size_t i = 0; i < nd.adjoint.size(); ++i) {
      real p = 1;
      for (int e = 0; e < exponent - 1; ++e) p *= x->value[i];
      x->adjoint[i] += nd.adjoint[i] * static_cast<real>(exponent) * p;
    }
  });
}

NodePtr abs_val(const NodePtr& x) {
  Tensor out = x->value;
  for (real& v : out.data) v = std::fabs(v);
  return make_node("abs", std::move(out), {x}, [x](const Node& nd) {
    for (std::size_t i = 0; i < nd.adjoint.size(); ++i) {
      const real s = x->value[i] > 0 ? real(1) : (x->value[i] < 0 ? real(-1) : real(0));
      x->adjoint[i] += nd.adjoint[i] * s;
    }
  });
}

NodePtr transpose(const NodePtr& x) {
  const Tensor& xv = x->value;
  if (xv.rank() != 2) {
    throw std::invalid_argument("transpose: expected rank-2 input, got " + shape_str(xv.shape));
  }
  const std::size_t r = xv.shape[0], c = xv.shape[1];
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.data[j * r + i] = xv.data[i * c + j];
  }
  return make_node("transpose", std::move(out), {x}, [x, r, c](const Node& nd) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        x->adjoint.data[i * c + j] += nd.adjoint.data[j * r + i];
      }
    }
  });
}

NodePtr reshape(const NodePtr& x, Shape new_shape) {
  if (numel(new_shape) != x->value.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x->value.shape) + " as " +
                                shape_str(new_shape));
  }
  Tensor out;
  out.shape = std::move(new_shape);
  out.data = x->value.data;
  return make_node("reshape", std::move(out), {x}, [x](const Node& nd) {
    for (std::size_t i = 0; i < nd.adjoint.size(); ++i) x->adjoint[i] += nd.adjoint[i];
  });
}

NodePtr scale(const NodePtr& x, real c) { return mul(x, make_leaf(Tensor::scalar(c), "const")); }

NodePtr sub(const NodePtr& a, const NodePtr& b) { return add(a, scale(b, real(-1))); }

std::vector<Node*> topo_order(const NodePtr& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS; a node is emitted after all of its parents.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children; root last
}

void backward(const NodePtr& root) {
  if (root->value.size() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_str(root->value.shape));
  }
  std::vector<Node*> order = topo_order(root);
  for (Node* n : order) {
    std::fill(n->adjoint.data.begin(), n->adjoint.data.end(), real(0));
  }
  root->adjoint[0] = 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace mwgan
