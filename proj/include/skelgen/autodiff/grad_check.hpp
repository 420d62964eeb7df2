// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skelgen/autodiff/params.hpp"

namespace skelgen::ad {

// Builds the scalar loss on a fresh tape. Parameters are read from the store
// the checker was given, so perturbations made by the checker are visible.
using LossClosure = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Entries checked per parameter; 0 checks every entry. When sampling, the
  // entry with the largest analytic gradient is always included.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
  // Relative error is |a - n| / max(|a|, |n|, denom_floor).
  double denom_floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per parameter, worst first
  double max_rel_error() const { return entries.empty() ? 0.0 : entries.front().max_rel_error; }
  bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

double relative_error(double analytic, double numeric, double floor = 1e-6);

// Compares tape gradients against central differences. Throws NumericError
// if any evaluated loss is non-finite. Parameter values are restored.
GradCheckReport grad_check(const LossClosure& loss, ParamStore& params,
                           const GradCheckOptions& opts = {});

}  // namespace skelgen::ad
