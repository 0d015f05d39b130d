#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "cascnn/errors.hpp"

namespace cascnn {

using Shape = std::vector<std::size_t>;

namespace detail {

// One vertex of the backward graph. Interior vertices keep a closure that
// distributes their seed (upstream derivative) into the parents' seeds.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // accumulated d(loss)/d(this) across backward() calls
  std::vector<double> seed;  // scratch used inside a single backward() pass
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  std::size_t size() const { return values.size(); }
};

}  // namespace detail

// Dense row-major tensor of doubles with reverse-mode differentiation.
//
// A Tensor is a shared handle to a graph node: copying a Tensor aliases the
// same storage, so the result of an operation keeps its inputs alive. Leaf
// tensors (constructed directly) receive gradients when backward() is called
// on a scalar computed from them; gradients accumulate until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from_values(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;

  double* data();
  const double* data() const;
  std::vector<double>& values();
  const std::vector<double>& values() const;

  // Value of a single-element tensor.
  double item() const;

  // Row-major element access; rank must match the number of indices.
  double& at(std::size_t i);
  double& at(std::size_t i, std::size_t j);
  double& at(std::size_t i, std::size_t j, std::size_t k);
  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l);
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j, std::size_t k) const;
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;

  // Accumulated gradient; empty until the first backward() reaches this node.
  const std::vector<double>& grad() const;
  void zero_grad();

  // Reverse pass from a scalar. Repeated calls accumulate into grad().
  void backward();

  // Internal graph handle, exposed for the operation implementations.
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

}  // namespace cascnn
