#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualpath/nn/tensor.hpp"

namespace dualpath::nn {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
};

struct Parameter {
  std::string name;
  Tensor value;
};

// Named trainable parameters with stable addresses, in insertion order.
class ParameterStore {
 public:
  Parameter& add(std::string name, Tensor init);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  // Total number of scalars.
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One gradient tensor per store parameter (index-aligned).
struct Gradients {
  std::vector<Tensor> grads;

  static Gradients zeros_like(const ParameterStore& store);
  Gradients& operator+=(const Gradients& other);
  void scale(double factor);
  double global_norm() const;
};

// Reverse-mode tape. Nodes are appended in evaluation order; backward()
// walks them in reverse. A tape built with grad disabled records values only.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Binds store[index]; repeated calls return the same node.
  Var param(const ParameterStore& store, std::size_t index);
  Var param(const ParameterStore& store, const std::string& name);

  // Appends an op result. `fn` is kept only if some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  // Gradient buffer of v, allocated as zeros on first access.
  Tensor& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v.id].grad.data.empty(); }

  // Seeds d(root)/d(root) = 1 (root must be a scalar) and back-propagates.
  void backward(Var root);

  // Adds the parameter gradients of the last backward() into `out`.
  void accumulate_parameter_grads(const ParameterStore& store, Gradients& out) const;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, std::size_t> bound_params_;  // store index -> node id
  const ParameterStore* store_ = nullptr;
  bool grad_enabled_;
};

// Adds `g` into the gradient of v when v participates in differentiation.
void accumulate(Var v, const Tensor& g);

}  // namespace dualpath::nn
