// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "skelgen/autodiff/kernels.hpp"
#include "skelgen/error.hpp"

namespace skelgen::ad {

namespace testing {
namespace {
std::atomic<Fault> g_fault{Fault::kNone};
}
void set_fault(Fault f) { g_fault.store(f); }
Fault fault() { return g_fault.load(); }
}  // namespace testing

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

[[noreturn]] void shape_error(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

void require_rank(const char* op, const Var& v, std::size_t rank) {
  if (v.value().rank() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " + to_string(v.shape()));
  }
}

void require_same_tape(const char* op, const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) shape_error(op, "operands live on different tapes");
}

double fault_factor(testing::Fault f) { return testing::fault() == f ? 2.0 : 1.0; }

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) shape_error("matmul", a.shape(), b.shape());
  Tensor out({n, m});
  kernels::matmul(a.value().data(), b.value().data(), out.data(), n, k, m);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    const int reps = testing::fault() == testing::Fault::kMatmulBackward ? 2 : 1;
    if (t.requires_grad(ia)) {
      for (int r = 0; r < reps; ++r) {
        kernels::matmul_nt_acc(g, t.value(ib).data(), t.grad(ia), n, k, m);
      }
    }
    if (t.requires_grad(ib)) kernels::matmul_tn_acc(t.value(ia).data(), g, t.grad(ib), n, k, m);
  });
}

Var bmm(Var a, Var b) {
  require_same_tape("bmm", a, b);
  require_rank("bmm", a, 3);
  require_rank("bmm", b, 3);
  const std::size_t B = a.dim(0), n = a.dim(1), d = a.dim(2), m = b.dim(2);
  if (b.dim(0) != B || b.dim(1) != d) shape_error("bmm", a.shape(), b.shape());
  Tensor out({B, n, m});
  const auto av = a.value().data(), bv = b.value().data();
  auto ov = out.data();
  for (std::size_t s = 0; s < B; ++s) {
    kernels::matmul(av.subspan(s * n * d, n * d), bv.subspan(s * d * m, d * m),
                    ov.subspan(s * n * m, n * m), n, d, m);
  }
  const auto ia = a.id(), ib = b.id();
  return a.tape().record("bmm", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (std::size_t s = 0; s < B; ++s) {
      auto gs = g.subspan(s * n * m, n * m);
      if (t.requires_grad(ia)) {
        kernels::matmul_nt_acc(gs, t.value(ib).data().subspan(s * d * m, d * m),
                               t.grad(ia).subspan(s * n * d, n * d), n, d, m);
      }
      if (t.requires_grad(ib)) {
        kernels::matmul_tn_acc(t.value(ia).data().subspan(s * n * d, n * d), gs,
                               t.grad(ib).subspan(s * d * m, d * m), n, d, m);
      }
    }
  });
}

Var transpose_last2(Var a) {
  require_rank("transpose_last2", a, 3);
  const std::size_t B = a.dim(0), n = a.dim(1), m = a.dim(2);
  Tensor out({B, m, n});
  const auto av = a.value().data();
  for (std::size_t s = 0; s < B; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) out[(s * m + j) * n + i] = av[(s * n + i) * m + j];
  const auto ia = a.id();
  return a.tape().record("transpose_last2", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t s = 0; s < B; ++s)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga[(s * n + i) * m + j] += g[(s * m + j) * n + i];
  });
}

Var add(Var a, Var b) {
  require_same_tape("add", a, b);
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor out(a.shape());
  const auto av = a.value().data(), bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record("add", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (auto id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto gi = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  require_same_tape("add_bias", a, bias);
  require_rank("add_bias", a, 2);
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (bias.value().size() != m) shape_error("add_bias", a.shape(), bias.shape());
  Tensor out(a.shape());
  const auto av = a.value().data(), bv = bias.value().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = av[i * m + j] + bv[j];
  const auto ia = a.id(), ib = bias.id();
  return a.tape().record("add_bias", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape("mul", a, b);
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor out(a.shape());
  const auto av = a.value().data(), bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record("mul", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad(ia);
      const auto bv = t.value(ib).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib);
      const auto av = t.value(ia).data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out(a.shape());
  const auto av = a.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  const auto ia = a.id();
  return a.tape().record("scale", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
}

Var weighted_sum(Var a, double wa, Var b, double wb) {
  require_same_tape("weighted_sum", a, b);
  if (a.shape() != b.shape()) shape_error("weighted_sum", a.shape(), b.shape());
  Tensor out(a.shape());
  const auto av = a.value().data(), bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = wa * av[i] + wb * bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record("weighted_sum", std::move(out), {ia, ib},
                         [=](Tape& t, std::size_t self) {
                           auto g = t.grad(self);
                           if (t.requires_grad(ia)) {
                             auto ga = t.grad(ia);
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += wa * g[i];
                           }
                           if (t.requires_grad(ib)) {
                             auto gb = t.grad(ib);
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] += wb * g[i];
                           }
                         });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id();
  return a.tape().record("sum", Tensor::scalar(s), {ia}, [=](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto ga = t.grad(ia);
    for (auto& v : ga) v += g;
  });
}

Var sigmoid(Var a) {
  Tensor out(a.shape());
  kernels::sigmoid(a.value().data(), out.data());
  const auto ia = a.id();
  return a.tape().record("sigmoid", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    const auto y = t.value(self).data();
    const double f = fault_factor(testing::Fault::kSigmoidBackward);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Tensor out(a.shape());
  kernels::tanh(a.value().data(), out.data());
  const auto ia = a.id();
  return a.tape().record("tanh", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    const auto y = t.value(self).data();
    const double f = fault_factor(testing::Fault::kTanhBackward);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += f * g[i] * (1.0 - y[i] * y[i]);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) shape_error("concat_cols", "no inputs");
  const std::size_t n = parts[0].dim(0);
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank("concat_cols", p, 2);
    require_same_tape("concat_cols", parts[0], p);
    if (p.dim(0) != n) shape_error("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.dim(1));
    ids.push_back(p.id());
    total += p.dim(1);
  }
  Tensor out({n, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].value().data();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(pv.data() + i * widths[k], widths[k], out.data().data() + i * total + off);
    off += widths[k];
  }
  return parts[0].tape().record(
      "concat_cols", std::move(out), ids, [=](Tape& t, std::size_t self) {
        auto g = t.grad(self);
        std::size_t o = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (t.requires_grad(ids[k])) {
            auto gk = t.grad(ids[k]);
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < widths[k]; ++j) gk[i * widths[k] + j] += g[i * total + o + j];
          }
          o += widths[k];
        }
      });
}

Var slice_cols(Var a, std::size_t start, std::size_t len) {
  require_rank("slice_cols", a, 2);
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (len == 0 || start + len > m) {
    shape_error("slice_cols", "columns [" + std::to_string(start) + ", " +
                                  std::to_string(start + len) + ") out of " + to_string(a.shape()));
  }
  Tensor out({n, len});
  const auto av = a.value().data();
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(av.data() + i * m + start, len, out.data().data() + i * len);
  const auto ia = a.id();
  return a.tape().record("slice_cols", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < len; ++j) ga[i * m + start + j] += g[i * len + j];
  });
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.value().size()) shape_error("reshape", a.shape(), shape);
  Tensor out(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
  const auto ia = a.id();
  return a.tape().record("reshape", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

namespace {

Var gather_impl(const char* op, Var table, std::span<const std::size_t> indices) {
  require_rank(op, table, 2);
  if (indices.empty()) shape_error(op, "empty index list");
  const std::size_t V = table.dim(0), E = table.dim(1);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  for (auto i : idx) {
    if (i >= V) {
      shape_error(op, "index " + std::to_string(i) + " out of range for table " +
                          to_string(table.shape()));
    }
  }
  Tensor out({idx.size(), E});
  const auto tv = table.value().data();
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(tv.data() + idx[r] * E, E, out.data().data() + r * E);
  const auto it = table.id();
  return table.tape().record(op, std::move(out), {it}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto gt = t.grad(it);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < E; ++j) gt[idx[r] * E + j] += g[r * E + j];
  });
}

}  // namespace

Var gather_rows(Var table, std::span<const std::size_t> indices) {
  return gather_impl("gather_rows", table, indices);
}

Var embedding(Var table, std::span<const std::size_t> indices) {
  return gather_impl("embedding", table, indices);
}

Var stack_steps(std::span<const Var> steps) {
  if (steps.empty()) shape_error("stack_steps", "no inputs");
  require_rank("stack_steps", steps[0], 2);
  const std::size_t R = steps[0].dim(0), d = steps[0].dim(1), n = steps.size();
  std::vector<std::size_t> ids;
  for (const auto& s : steps) {
    require_same_tape("stack_steps", steps[0], s);
    if (s.shape() != steps[0].shape()) shape_error("stack_steps", steps[0].shape(), s.shape());
    ids.push_back(s.id());
  }
  Tensor out({R, n, d});
  for (std::size_t k = 0; k < n; ++k) {
    const auto sv = steps[k].value().data();
    for (std::size_t r = 0; r < R; ++r)
      std::copy_n(sv.data() + r * d, d, out.data().data() + (r * n + k) * d);
  }
  return steps[0].tape().record("stack_steps", std::move(out), ids,
                                [=](Tape& t, std::size_t self) {
                                  auto g = t.grad(self);
                                  for (std::size_t k = 0; k < n; ++k) {
                                    if (!t.requires_grad(ids[k])) continue;
                                    auto gk = t.grad(ids[k]);
                                    for (std::size_t r = 0; r < R; ++r)
                                      for (std::size_t j = 0; j < d; ++j)
                                        gk[r * d + j] += g[(r * n + k) * d + j];
                                  }
                                });
}

Var select_step(Var a, std::size_t step) {
  require_rank("select_step", a, 3);
  const std::size_t R = a.dim(0), n = a.dim(1), d = a.dim(2);
  if (step >= n) shape_error("select_step", "step " + std::to_string(step) + " out of " + to_string(a.shape()));
  Tensor out({R, d});
  const auto av = a.value().data();
  for (std::size_t r = 0; r < R; ++r)
    std::copy_n(av.data() + (r * n + step) * d, d, out.data().data() + r * d);
  const auto ia = a.id();
  return a.tape().record("select_step", std::move(out), {ia}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto ga = t.grad(ia);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t j = 0; j < d; ++j) ga[(r * n + step) * d + j] += g[r * d + j];
  });
}

Var where_rows(std::span<const std::uint8_t> keep, Var a, Var b) {
  require_same_tape("where_rows", a, b);
  require_rank("where_rows", a, 2);
  if (a.shape() != b.shape()) shape_error("where_rows", a.shape(), b.shape());
  const std::size_t R = a.dim(0), d = a.dim(1);
  if (keep.size() != R) shape_error("where_rows", "mask length " + std::to_string(keep.size()) + " vs " + to_string(a.shape()));
  std::vector<std::uint8_t> mask(keep.begin(), keep.end());
  Tensor out(a.shape());
  const auto av = a.value().data(), bv = b.value().data();
  for (std::size_t r = 0; r < R; ++r)
    std::copy_n((mask[r] ? av : bv).data() + r * d, d, out.data().data() + r * d);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record("where_rows", std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    for (std::size_t r = 0; r < R; ++r) {
      const auto target = mask[r] ? ia : ib;
      if (!t.requires_grad(target)) continue;
      auto gt = t.grad(target);
      for (std::size_t j = 0; j < d; ++j) gt[r * d + j] += g[r * d + j];
    }
  });
}

Var softmax(Var x, std::size_t axis, std::span<const std::uint8_t> mask) {
  const auto& shape = x.shape();
  if (axis >= shape.size()) {
    shape_error("softmax", "axis " + std::to_string(axis) + " out of range for " + to_string(shape));
  }
  if (!mask.empty() && mask.size() != x.value().size()) {
    shape_error("softmax", "mask length " + std::to_string(mask.size()) + " vs " + to_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  std::vector<std::uint8_t> valid(mask.begin(), mask.end());
  const auto xv = x.value().data();
  Tensor out(shape);
  auto ok = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < len; ++a) {
        const auto i = base + a * inner;
        if (ok(i)) mx = std::max(mx, xv[i]);
      }
      if (mx == -std::numeric_limits<double>::infinity()) continue;  // fully masked
      double z = 0.0;
      for (std::size_t a = 0; a < len; ++a) {
        const auto i = base + a * inner;
        if (ok(i)) {
          out[i] = std::exp(xv[i] - mx);
          z += out[i];
        }
      }
      for (std::size_t a = 0; a < len; ++a) out[base + a * inner] /= z;
    }
  }
  const auto ix = x.id();
  return x.tape().record("softmax", std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    auto g = t.grad(self);
    auto gx = t.grad(ix);
    const auto y = t.value(self).data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        double dot = 0.0;
        for (std::size_t a = 0; a < len; ++a) dot += y[base + a * inner] * g[base + a * inner];
        for (std::size_t a = 0; a < len; ++a) {
          const auto i = base + a * inner;
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    }
  });
}

Var cross_entropy(Var logits, std::span<const std::int64_t> targets,
                  std::optional<std::int64_t> ignore_index) {
  require_rank("cross_entropy", logits, 2);
  const std::size_t N = logits.dim(0), V = logits.dim(1);
  if (targets.size() != N) {
    shape_error("cross_entropy", "target count " + std::to_string(targets.size()) +
                                     " vs logits " + to_string(logits.shape()));
  }
  std::vector<std::int64_t> tg(targets.begin(), targets.end());
  std::size_t count = 0;
  for (auto y : tg) {
    if (ignore_index && y == *ignore_index) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= V) {
      throw ValidationError("cross_entropy: target index " + std::to_string(y) +
                            " out of range for " + std::to_string(V) + " classes");
    }
    ++count;
  }
  const auto lv = logits.value().data();
  // Softmax probabilities are kept for the backward rule.
  std::vector<double> probs(N * V, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (ignore_index && tg[i] == *ignore_index) continue;
    const double* row = lv.data() + i * V;
    const double mx = *std::max_element(row, row + V);
    double z = 0.0;
    for (std::size_t j = 0; j < V; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z) + mx;
    for (std::size_t j = 0; j < V; ++j) probs[i * V + j] = std::exp(row[j] - logz);
    total += logz - row[tg[i]];
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  const auto il = logits.id();
  return logits.tape().record(
      "cross_entropy", Tensor::scalar(loss), {il},
      [=, probs = std::move(probs)](Tape& t, std::size_t self) {
        if (count == 0) return;
        const double g = t.grad(self)[0] / static_cast<double>(count);
        auto gl = t.grad(il);
        for (std::size_t i = 0; i < N; ++i) {
          if (ignore_index && tg[i] == *ignore_index) continue;
          for (std::size_t j = 0; j < V; ++j) gl[i * V + j] += g * probs[i * V + j];
          gl[i * V + static_cast<std::size_t>(tg[i])] -= g;
        }
      });
}

}  // namespace skelgen::ad
