// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::ad {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double eval_loss(const LossClosure& loss) {
  Tape tape;
  const double v = loss(tape).value().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossClosure& loss, ParamStore& params,
                           const GradCheckOptions& opts) {
  params.zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    if (!std::isfinite(l.value().item())) throw NumericError("grad_check: non-finite loss");
    tape.backward(l);
  }

  GradCheckReport report;
  Rng rng(opts.seed);
  for (auto& [name, t] : params) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    std::vector<std::size_t> idx(t.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (opts.max_entries && opts.max_entries < t.size()) {
      std::size_t top = 0;
      for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(analytic[i]) > std::abs(analytic[top])) top = i;
      rng.shuffle(idx.begin(), idx.end());
      idx.resize(opts.max_entries - 1);
      if (std::find(idx.begin(), idx.end(), top) == idx.end()) idx.push_back(top);
      std::sort(idx.begin(), idx.end());
    }

    GradCheckEntry entry{name, 0.0, idx.size(), idx.empty() ? 0 : idx.front()};
    for (auto i : idx) {
      const double orig = t[i];
      t[i] = orig + opts.step;
      const double up = eval_loss(loss);
      t[i] = orig - opts.step;
      const double down = eval_loss(loss);
      t[i] = orig;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double err = relative_error(analytic[i], numeric, opts.denom_floor);
      if (err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const auto& a, const auto& b) { return a.max_rel_error > b.max_rel_error; });
  return report;
}

}  // namespace skelgen::ad
