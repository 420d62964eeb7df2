// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "skelgen/autodiff/tensor.hpp"

namespace skelgen::ad {

class Tape;

// Handle to a value recorded on a tape. Cheap to copy; only valid while the
// tape that produced it is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t i) const { return value().dim(i); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Define-by-run reverse-mode tape. Nodes are appended in execution order, so
// inputs always precede the node that consumes them; backward() walks the
// list once in reverse.
class Tape {
 public:
  // Propagates gradient from node `self` into its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Trainable leaf; backward() accumulates into `param`'s gradient buffer.
  Var param(Tensor& param);
  // Read-only leaf referencing external storage (no gradient).
  Var frozen(const Tensor& value);

  // Appends an op result. Throws NumericError naming `op` if the value holds
  // NaN or Inf.
  Var record(const char* op, Tensor value, std::vector<std::size_t> inputs,
             BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of a node, allocated (zero) on first access.
  std::span<double> grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }
  const char* op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule once in reverse.
  // Parameter leaves receive their gradient added into Tensor::grad().
  void backward(Var loss);

 private:
  struct Node {
    const char* op = "";
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor* param = nullptr;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace skelgen::ad
