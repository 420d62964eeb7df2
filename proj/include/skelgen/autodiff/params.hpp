// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skelgen/autodiff/tape.hpp"
#include "skelgen/autodiff/tensor.hpp"

namespace skelgen::ad {

// Named, ordered parameter set. Iteration order is by name, which keeps
// optimizer updates, checkpoints and grad-check reports deterministic.
class ParamStore {
 public:
  // Creates a parameter initialised uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
  // from a generator seeded by (seed, name). Two stores built with the same
  // seed agree on every parameter they share, whatever else they contain.
  Tensor& create(const std::string& name, Shape shape, std::size_t fan_in, std::uint64_t seed);
  // Inserts or replaces a parameter with an explicit value.
  Tensor& set(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t total_elements() const;
  std::vector<std::string> names() const;

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

// Resolves parameter names to tape leaves, once per tape. A binding over a
// const store yields frozen leaves that never receive gradients.
class ParamBinding {
 public:
  ParamBinding(Tape& tape, ParamStore& store) : tape_(tape), mutable_(&store), store_(&store) {}
  ParamBinding(Tape& tape, const ParamStore& store) : tape_(tape), store_(&store) {}

  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }
  const ParamStore& store() const { return *store_; }

 private:
  Tape& tape_;
  ParamStore* mutable_ = nullptr;
  const ParamStore* store_;
  std::map<std::string, Var> bound_;
};

}  // namespace skelgen::ad
