#include "slicevol/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "slicevol/errors.hpp"

namespace slicevol::ad {

namespace {

void require_finite(std::span<const double> values, const char* where) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + where);
  }
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t s : shape) {
    if (s == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
  }
  if (element_count(shape) != data.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  require_finite(data, "tensor construction");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  node_ = std::move(node);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw DimensionError("axis out of range for shape " + to_string(s));
  return s[axis];
}

std::size_t Tensor::cols() const { return shape().back(); }

std::size_t Tensor::rows() const { return numel() / cols(); }

std::span<const double> Tensor::data() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor Tensor::detach() const { return as_leaf(false); }

Tensor Tensor::as_leaf(bool requires_grad) const {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape();
  node->value = node_->value;
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
               detail::BackwardFn backward) {
  if (element_count(shape) != value.size()) {
    throw DimensionError("operation result " + to_string(shape) + " holds " +
                         std::to_string(value.size()) + " values");
  }
  require_finite(value, "tensor operation");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Graph Graph::trace(const Tensor& root) {
  Graph graph;
  if (!root.requires_grad()) return graph;
  // Iterative post-order DFS; the emitted order is topological.
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<const detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.id(), 0);
  visited.insert(root.id());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      graph.nodes_.push_back(node);
      stack.pop_back();
    }
  }
  return graph;
}

std::vector<const detail::Node*> Graph::leaves() const {
  std::vector<const detail::Node*> out;
  for (const detail::Node* n : nodes_) {
    if (n->is_leaf()) out.push_back(n);
  }
  return out;
}

std::vector<double> Gradients::of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) return std::vector<double>(leaf.numel(), 0.0);
  return it->second;
}

Gradients backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + to_string(loss.shape()));
  }
  Gradients result;
  const Graph graph = Graph::trace(loss);
  const auto nodes = graph.nodes();
  if (nodes.empty()) return result;

  std::unordered_map<const detail::Node*, std::size_t> index;
  index.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i], i);

  std::vector<std::vector<double>> grads(nodes.size());
  grads.back().assign(1, 1.0);

  std::vector<std::span<double>> grad_in;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const detail::Node* node = nodes[i];
    if (grads[i].empty()) grads[i].assign(node->value.size(), 0.0);
    if (node->is_leaf()) {
      result.grads_.emplace(node, std::move(grads[i]));
      continue;
    }
    grad_in.assign(node->inputs.size(), std::span<double>());
    for (std::size_t k = 0; k < node->inputs.size(); ++k) {
      const detail::Node* input = node->inputs[k].get();
      if (!input->requires_grad) continue;
      auto& g = grads[index.at(input)];
      if (g.empty()) g.assign(input->value.size(), 0.0);
      grad_in[k] = g;
    }
    node->backward(*node, grads[i], grad_in);
    grads[i] = {};
  }
  return result;
}

}  // namespace slicevol::ad
