// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/params.hpp"

#include <cmath>

#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::ad {

Tensor& ParamStore::create(const std::string& name, Shape shape, std::size_t fan_in,
                           std::uint64_t seed) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in ? fan_in : 1));
  Rng rng(fnv1a64(name, seed ^ 0x9e3779b97f4a7c15ULL));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return set(name, std::move(t));
}

Tensor& ParamStore::set(const std::string& name, Tensor value) {
  auto [it, inserted] = params_.insert_or_assign(name, std::move(value));
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

Var ParamBinding::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = mutable_ ? tape_.param(mutable_->at(name)) : tape_.frozen(store_->at(name));
  bound_.emplace(name, v);
  return v;
}

}  // namespace skelgen::ad
