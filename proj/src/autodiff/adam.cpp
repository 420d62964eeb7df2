// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/adam.hpp"

#include <cmath>

#include "skelgen/error.hpp"

namespace skelgen::ad {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::size_t step, const AdamConfig& cfg) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw ShapeError("adam_update: parameter, gradient and moment lengths differ");
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void Adam::step(ParamStore& params) {
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) throw ValidationError("adam: missing gradient for parameter '" + name + "'");
  }
  ++step_;
  for (auto& [name, t] : params) {
    auto& mo = moments_[name];
    if (mo.m.size() != t.size()) {
      mo.m.assign(t.size(), 0.0);
      mo.v.assign(t.size(), 0.0);
    }
    adam_update(t.data(), t.grad(), mo.m, mo.v, step_, cfg_);
  }
}

}  // namespace skelgen::ad
