// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/layers.hpp"

#include "skelgen/autodiff/ops.hpp"
#include "skelgen/error.hpp"

namespace skelgen::ad {

void Linear::init(ParamStore& store, std::uint64_t seed) const {
  store.create(name + ".W", {in, out}, in, seed);
  if (bias) store.create(name + ".b", {out}, in, seed);
}

Var Linear::operator()(ParamBinding& p, Var x) const {
  Var y = matmul(x, p(name + ".W"));
  return bias ? add_bias(y, p(name + ".b")) : y;
}

void LstmCell::init(ParamStore& store, std::uint64_t seed) const {
  store.create(name + ".Wx", {in, 4 * hidden}, in, seed);
  store.create(name + ".Wh", {hidden, 4 * hidden}, hidden, seed);
  Tensor& b = store.create(name + ".b", {4 * hidden}, hidden, seed);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
}

LstmState LstmCell::zero_state(Tape& tape, std::size_t batch) const {
  return {tape.constant(Tensor({batch, hidden})), tape.constant(Tensor({batch, hidden}))};
}

LstmState lstm_step(ParamBinding& p, const LstmCell& cell, Var x, const LstmState& state,
                    std::optional<Var> extra_gates) {
  if (x.value().rank() != 2 || x.dim(1) != cell.in) {
    throw ShapeError("lstm_step(" + cell.name + "): input " + to_string(x.shape()) +
                     " does not match input size " + std::to_string(cell.in));
  }
  if (state.h.shape() != Shape{x.dim(0), cell.hidden} || state.c.shape() != state.h.shape()) {
    throw ShapeError("lstm_step(" + cell.name + "): state " + to_string(state.h.shape()) +
                     " does not match batch " + std::to_string(x.dim(0)) + " and hidden " +
                     std::to_string(cell.hidden));
  }
  const std::size_t h = cell.hidden;
  Var gates = add(matmul(x, p(cell.name + ".Wx")), matmul(state.h, p(cell.name + ".Wh")));
  gates = add_bias(gates, p(cell.name + ".b"));
  if (extra_gates) gates = add(gates, *extra_gates);
  Var i = sigmoid(slice_cols(gates, 0, h));
  Var f = sigmoid(slice_cols(gates, h, h));
  Var g = tanh(slice_cols(gates, 2 * h, h));
  Var o = sigmoid(slice_cols(gates, 3 * h, h));
  Var c = add(mul(f, state.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

LstmCell BiLstm::cell(std::size_t layer, bool forward) const {
  return {name + ".l" + std::to_string(layer) + (forward ? ".fwd" : ".bwd"),
          layer == 0 ? in : 2 * hidden, hidden};
}

void BiLstm::init(ParamStore& store, std::uint64_t seed) const {
  for (std::size_t l = 0; l < layers; ++l) {
    cell(l, true).init(store, seed);
    cell(l, false).init(store, seed);
  }
}

namespace {

struct DirectionResult {
  std::vector<Var> hs;
  Var final_h;
};

DirectionResult run_direction(ParamBinding& p, const LstmCell& cell, std::span<const Var> seq,
                              std::span<const std::size_t> lengths, bool forward) {
  const std::size_t n = seq.size();
  const std::size_t batch = seq[0].dim(0);
  LstmState s = cell.zero_state(p.tape(), batch);
  std::vector<Var> hs(n);
  std::vector<std::uint8_t> keep(batch);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t step = forward ? k : n - 1 - k;
    LstmState next = lstm_step(p, cell, seq[step], s);
    if (!lengths.empty()) {
      bool all = true;
      for (std::size_t r = 0; r < batch; ++r) {
        keep[r] = step < lengths[r] ? 1 : 0;
        all = all && keep[r];
      }
      if (!all) next = {where_rows(keep, next.h, s.h), where_rows(keep, next.c, s.c)};
    }
    s = next;
    hs[step] = s.h;
  }
  return {std::move(hs), s.h};
}

}  // namespace

BiLstmOutput bilstm_encode(ParamBinding& p, const BiLstm& net, std::span<const Var> seq,
                           std::span<const std::size_t> lengths) {
  if (seq.empty()) throw ShapeError("bilstm_encode(" + net.name + "): empty sequence");
  if (!lengths.empty() && lengths.size() != seq[0].dim(0)) {
    throw ShapeError("bilstm_encode(" + net.name + "): " + std::to_string(lengths.size()) +
                     " lengths for batch " + std::to_string(seq[0].dim(0)));
  }
  std::vector<Var> current(seq.begin(), seq.end());
  BiLstmOutput out;
  for (std::size_t l = 0; l < net.layers; ++l) {
    auto f = run_direction(p, net.cell(l, true), current, lengths, true);
    auto b = run_direction(p, net.cell(l, false), current, lengths, false);
    for (std::size_t k = 0; k < current.size(); ++k) {
      const Var pair[] = {f.hs[k], b.hs[k]};
      current[k] = concat_cols(pair);
    }
    out.fwd_final = f.final_h;
    out.bwd_final = b.final_h;
  }
  out.steps = std::move(current);
  return out;
}

}  // namespace skelgen::ad
