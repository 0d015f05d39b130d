#include "cascnn/tensor.hpp"

#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>

namespace cascnn {

namespace {

std::size_t shape_size(const Shape& shape) {
  std::size_t total = 1;
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor shape has a zero extent");
    total *= extent;
  }
  return total;
}

}  // namespace

Tensor Tensor::wrap(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  auto node = std::make_shared<detail::Node>();
  node->values.assign(shape_size(shape), 0.0);
  node->shape = std::move(shape);
  return wrap(std::move(node));
}

Tensor Tensor::full(Shape shape, double value) {
  auto node = std::make_shared<detail::Node>();
  node->values.assign(shape_size(shape), value);
  node->shape = std::move(shape);
  return wrap(std::move(node));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("from_values: shape holds " + std::to_string(shape_size(shape)) +
                         " elements but " + std::to_string(values.size()) + " were given");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  return wrap(std::move(node));
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

const Shape& Tensor::shape() const {
  if (!node_) throw UsageError("shape() on an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const {
  if (!node_) throw UsageError("size() on an undefined tensor");
  return node_->values.size();
}

double* Tensor::data() { return values().data(); }
const double* Tensor::data() const { return values().data(); }

std::vector<double>& Tensor::values() {
  if (!node_) throw UsageError("values() on an undefined tensor");
  return node_->values;
}

const std::vector<double>& Tensor::values() const {
  if (!node_) throw UsageError("values() on an undefined tensor");
  return node_->values;
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() requires a single-element tensor");
  return values()[0];
}

namespace {

inline std::size_t flat1(const Shape& s, std::size_t i) {
  if (s.size() != 1) throw DimensionError("1-index access on a rank-" + std::to_string(s.size()) + " tensor");
  return i;
}
inline std::size_t flat2(const Shape& s, std::size_t i, std::size_t j) {
  if (s.size() != 2) throw DimensionError("2-index access on a rank-" + std::to_string(s.size()) + " tensor");
  return i * s[1] + j;
}
inline std::size_t flat3(const Shape& s, std::size_t i, std::size_t j, std::size_t k) {
  if (s.size() != 3) throw DimensionError("3-index access on a rank-" + std::to_string(s.size()) + " tensor");
  return (i * s[1] + j) * s[2] + k;
}
inline std::size_t flat4(const Shape& s, std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
  if (s.size() != 4) throw DimensionError("4-index access on a rank-" + std::to_string(s.size()) + " tensor");
  return ((i * s[1] + j) * s[2] + k) * s[3] + l;
}

}  // namespace

double& Tensor::at(std::size_t i) { return values()[flat1(shape(), i)]; }
double& Tensor::at(std::size_t i, std::size_t j) { return values()[flat2(shape(), i, j)]; }
double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) { return values()[flat3(shape(), i, j, k)]; }
double& Tensor::at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
  return values()[flat4(shape(), i, j, k, l)];
}
double Tensor::at(std::size_t i) const { return values()[flat1(shape(), i)]; }
double Tensor::at(std::size_t i, std::size_t j) const { return values()[flat2(shape(), i, j)]; }
double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  return values()[flat3(shape(), i, j, k)];
}
double Tensor::at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
  return values()[flat4(shape(), i, j, k, l)];
}

const std::vector<double>& Tensor::grad() const {
  if (!node_) throw UsageError("grad() on an undefined tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_) throw UsageError("zero_grad() on an undefined tensor");
  node_->grad.assign(node_->values.size(), 0.0);
}

void Tensor::backward() {
  if (!node_) throw UsageError("backward() on an undefined tensor");
  if (node_->values.size() != 1) {
    throw UsageError("backward() requires a scalar, got a tensor of " +
                     std::to_string(node_->values.size()) + " elements");
  }

  // Post-order DFS; reversing it yields an order where every node is
  // processed before any of its parents.
  std::vector<detail::Node*> order;
  {
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [node, next_child] = stack.back();
      if (next_child < node->parents.size()) {
        detail::Node* parent = node->parents[next_child].get();
        ++next_child;
        if (visited.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  for (detail::Node* node : order) node->seed.assign(node->size(), 0.0);
  node_->seed[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backprop) node->backprop(*node);
  }

  for (detail::Node* node : order) {
    if (node->grad.empty()) node->grad.assign(node->size(), 0.0);
    for (std::size_t i = 0; i < node->size(); ++i) node->grad[i] += node->seed[i];
    node->seed = {};
  }
}

}  // namespace cascnn
