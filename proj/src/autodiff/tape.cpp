// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/tape.hpp"

#include <cmath>
#include <string>

#include "skelgen/error.hpp"

namespace skelgen::ad {

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Tensor& param) {
  Node n;
  n.op = "param";
  n.external = &param;
  n.param = &param;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::frozen(const Tensor& value) {
  Node n;
  n.op = "frozen";
  n.external = &value;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> inputs,
                 BackwardFn backward) {
  for (double v : value.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by op '") + op + "'");
    }
  }
  Node n;
  n.op = op;
  n.owned = std::move(value);
  for (auto id : inputs) n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

std::span<double> Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.value().size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " + to_string(loss.shape()));
  }
  if (!std::isfinite(loss.value().item())) throw NumericError("non-finite loss");
  grad(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      n.param->ensure_grad();
      auto g = n.param->grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

}  // namespace skelgen::ad
