#include "dualpath/nn/tape.hpp"

#include <cmath>

#include "dualpath/errors.hpp"

namespace dualpath::nn {

const Tensor& Var::value() const {
  if (tape == nullptr) fail(ErrorKind::kInvalidArgument, "unbound variable");
  return tape->value(*this);
}

Parameter& ParameterStore::add(std::string name, Tensor init) {
  if (index_.count(name)) fail(ErrorKind::kInvalidArgument, "duplicate parameter " + name);
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(Parameter{std::move(name), std::move(init)}));
  return *params_.back();
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::kInvalidArgument, "unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Gradients Gradients::zeros_like(const ParameterStore& store) {
  Gradients g;
  g.grads.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) g.grads.emplace_back(store[i].value.shape);
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.grads.size() != grads.size()) fail(ErrorKind::kDimension, "gradient sets differ in size");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& a = grads[i].data;
    const auto& b = other.grads[i].data;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  }
  return *this;
}

void Gradients::scale(double factor) {
  for (auto& g : grads) {
    for (auto& v : g.data) v *= factor;
  }
}

double Gradients::global_norm() const {
  double s = 0.0;
  for (const auto& g : grads) {
    for (double v : g.data) s += v * v;
  }
  return std::sqrt(s);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor{}, false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(const ParameterStore& store, std::size_t index) {
  if (store_ != nullptr && store_ != &store) fail(ErrorKind::kInvalidArgument, "tape already bound to another store");
  store_ = &store;
  if (index >= store.size()) fail(ErrorKind::kInvalidArgument, "parameter index out of range");
  const auto it = bound_params_.find(index);
  if (it != bound_params_.end()) return Var{this, it->second};
  nodes_.push_back(Node{store[index].value, Tensor{}, grad_enabled_, nullptr});
  bound_params_.emplace(index, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(const ParameterStore& store, const std::string& name) { return param(store, store.index_of(name)); }

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
  nodes_.push_back(Node{std::move(value), Tensor{}, needs, needs ? std::move(fn) : nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id].requires_grad;
  nodes_.push_back(Node{std::move(value), Tensor{}, needs, needs ? std::move(fn) : nullptr});
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.data.empty()) n.grad = Tensor(n.value.shape, 0.0);
  return n.grad;
}

void Tape::backward(Var root) {
  if (!grad_enabled_) fail(ErrorKind::kInvalidArgument, "backward on a tape without gradients");
  if (nodes_[root.id].value.size() != 1) fail(ErrorKind::kDimension, "backward root must be a scalar");
  grad(root).data[0] += 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.data.empty()) continue;
    n.backward(n.grad);
  }
}

void Tape::accumulate_parameter_grads(const ParameterStore& store, Gradients& out) const {
  if (out.grads.size() != store.size()) fail(ErrorKind::kDimension, "gradient set does not match the store");
  for (const auto& [index, id] : bound_params_) {
    const Tensor& g = nodes_[id].grad;
    if (g.data.empty()) continue;
    auto& dst = out.grads[index].data;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g.data[k];
  }
}

void accumulate(Var v, const Tensor& g) {
  if (!v.tape->requires_grad(v)) return;
  auto& dst = v.tape->grad(v).data;
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g.data[k];
}

}  // namespace dualpath::nn
