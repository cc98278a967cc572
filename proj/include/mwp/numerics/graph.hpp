#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mwp/numerics/tensor.hpp"

namespace mwp {

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad();
};

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  const Tensor& grad() const;
  const std::vector<std::size_t>& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape of primitive applications. Nodes are appended in creation order, so
// the tape is topologically sorted by construction. A graph created with
// record == false evaluates values only and cannot be differentiated.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Constant leaf that reads `value` in place; the tensor must outlive the graph.
  Var reference(const Tensor& value);
  Var variable(Tensor value);
  // Leaf bound to external storage; backward() adds its gradient to p.grad.
  Var parameter(Parameter& p);

  // Appends a node computed from `inputs`. `fn` receives the graph and the
  // node's id and must push gradients into its inputs via accumulate().
  Var emit(Tensor value, const std::vector<Var>& inputs, BackwardFn fn, const char* op);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ref != nullptr ? *n.ref : n.value;
  }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

  // Adds `g` into the gradient of node `id` (no-op for constants).
  void accumulate(std::size_t id, const Tensor& g);
  // Mutable gradient buffer of node `id`, zero-initialised on first use.
  Tensor& grad_buffer(std::size_t id);

  // Reverse-mode sweep from a single-element loss node.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
    const Tensor* ref = nullptr;
  };

  std::deque<Node> nodes_;
  bool record_;
};

}  // namespace mwp
