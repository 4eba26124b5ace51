#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace slicevol::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

struct Node;

// Accumulates d(loss)/d(input_k) into grad_in[k]. Spans for inputs that do not
// require a gradient are empty and must be skipped.
using BackwardFn = std::function<void(const Node& self, std::span<const double> grad_out,
                                      std::span<const std::span<double>> grad_in)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<std::shared_ptr<const Node>> inputs;
  BackwardFn backward;  // empty for leaves

  bool is_leaf() const { return !backward; }
};

}  // namespace detail

// Immutable dense tensor of 64-bit floats in row-major order. Copies share the
// underlying node; every operation produces a new tensor and, when any input
// requires a gradient, records how to propagate it.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const { return data().size(); }
  // Leading extent when viewed as a matrix of rows over the last axis.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }
  double item() const;

  bool requires_grad() const;
  // Same values, cut from the graph.
  Tensor detach() const;
  // A fresh leaf carrying these values.
  Tensor as_leaf(bool requires_grad) const;

  const detail::Node* id() const { return node_.get(); }
  const std::shared_ptr<const detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op(Shape, std::vector<double>, std::vector<Tensor>, detail::BackwardFn);

  std::shared_ptr<const detail::Node> node_;
};

// Builds the result of a differentiable operation. The backward function and
// input references are retained only if some input requires a gradient.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
               detail::BackwardFn backward);

// Nodes reachable from a root that participate in differentiation, in
// topological order (inputs before consumers).
class Graph {
 public:
  static Graph trace(const Tensor& root);

  std::span<const detail::Node* const> nodes() const { return nodes_; }
  std::vector<const detail::Node*> leaves() const;

 private:
  std::vector<const detail::Node*> nodes_;
};

class Gradients {
 public:
  // d(loss)/d(leaf); zeros when the leaf is not reachable from the loss.
  std::vector<double> of(const Tensor& leaf) const;
  bool reached(const Tensor& leaf) const { return grads_.contains(leaf.id()); }
  std::size_t leaf_count() const { return grads_.size(); }

 private:
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const detail::Node*, std::vector<double>> grads_;
};

// Reverse-mode sweep from a scalar loss. Throws ContractError otherwise.
Gradients backward(const Tensor& loss);

}  // namespace slicevol::ad
