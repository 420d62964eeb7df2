// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "skelgen/autodiff/tape.hpp"

namespace skelgen::ad {

// Differentiable ops. Every op checks shapes, records one tape node and
// registers its backward rule. Shape errors name the op and both shapes.

Var matmul(Var a, Var b);                  // [n x k] . [k x m]
Var bmm(Var a, Var b);                     // [B x n x d] . [B x d x m]
Var transpose_last2(Var a);                // [B x n x m] -> [B x m x n]

Var add(Var a, Var b);                     // same shape
Var add_bias(Var a, Var bias);             // [n x m] + [m], bias broadcast over rows
Var mul(Var a, Var b);                     // elementwise, same shape
Var scale(Var a, double c);
Var weighted_sum(Var a, double wa, Var b, double wb);  // wa*a + wb*b
Var sum(Var a);                            // -> [1]

Var sigmoid(Var a);
Var tanh(Var a);

Var concat_cols(std::span<const Var> parts);  // [n x m_i] -> [n x sum m_i]
Var slice_cols(Var a, std::size_t start, std::size_t len);
Var reshape(Var a, Shape shape);

// Row lookup: out[i] = table[indices[i]]. embedding() is the same op with an
// error message phrased for vocabulary lookups.
Var gather_rows(Var table, std::span<const std::size_t> indices);
Var embedding(Var table, std::span<const std::size_t> indices);

Var stack_steps(std::span<const Var> steps);   // n x [R x d] -> [R x n x d]
Var select_step(Var a, std::size_t step);      // [R x n x d] -> [R x d]

// Row r of the result is a[r] where keep[r] != 0, else b[r]. Exact copy, no
// arithmetic, so carried states are bit-identical.
Var where_rows(std::span<const std::uint8_t> keep, Var a, Var b);

// Softmax along `axis` with max subtraction. With a mask (same length as x,
// nonzero = valid), masked entries are exactly 0 and a fully masked slice is
// all zeros.
Var softmax(Var x, std::size_t axis, std::span<const std::uint8_t> mask = {});

// Mean of -log softmax(logits)[target] over rows whose target is not
// `ignore_index`. All rows ignored gives a zero loss and zero gradient.
Var cross_entropy(Var logits, std::span<const std::int64_t> targets,
                  std::optional<std::int64_t> ignore_index = std::nullopt);

namespace testing {

// Deliberately wrong backward rules, for verifying that the gradient checker
// catches faults. Process-global; tests must reset to kNone.
enum class Fault { kNone, kTanhBackward, kSigmoidBackward, kMatmulBackward };
void set_fault(Fault f);
Fault fault();

}  // namespace testing

}  // namespace skelgen::ad
