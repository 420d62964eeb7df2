// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "skelgen/autodiff/params.hpp"

namespace skelgen::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update in place. `step` is 1-based.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::size_t step, const AdamConfig& cfg);

// Adam over a whole ParamStore; first/second moments persist per parameter name.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update using each parameter's gradient buffer. Throws if a
  // parameter has no gradient.
  void step(ParamStore& params);
  std::size_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamConfig cfg_;
  std::size_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace skelgen::ad
