#include "mwp/numerics/graph.hpp"

namespace mwp {

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) {
    grad = Tensor(value.shape());
  } else {
    grad.fill(0.0);
  }
}

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Graph::reference(const Tensor& value) {
  Node node;
  node.ref = &value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, record_});
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Parameter& p) {
  Node node;
  node.ref = &p.value;
  node.param = record_ ? &p : nullptr;
  node.requires_grad = record_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::emit(Tensor value, const std::vector<Var>& inputs, BackwardFn fn, const char* op) {
  require_finite(value, op);
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (const Var& v : inputs) {
      if (v.graph() != this) throw ContractError(std::string(op) + ": input from another graph");
      node.inputs.push_back(v.id());
      node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  const Tensor& v = value(id);
  if (n.grad.shape() != v.shape()) n.grad = Tensor(v.shape());
  return n.grad;
}

void Graph::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = grad_buffer(id);
  if (buf.size() != g.size()) {
    throw DimensionError("gradient shape " + shape_string(g.shape()) + " does not match " +
                         shape_string(buf.shape()));
  }
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Graph::backward(Var loss) {
  if (!record_) throw ContractError("backward on a graph built without recording");
  if (loss.graph() != this) throw ContractError("loss belongs to another graph");
  const std::size_t root = loss.id();
  if (value(root).size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(value(root).shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[root].requires_grad) return;
  grad_buffer(root)[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
      auto dst = p.grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

}  // namespace mwp
