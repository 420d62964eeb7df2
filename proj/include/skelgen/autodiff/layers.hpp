// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skelgen/autodiff/params.hpp"

namespace skelgen::ad {

// Layers are plain descriptors: a parameter-name prefix plus dimensions.
// init() creates the parameters in a store; the forward functions read them
// through a ParamBinding, so one descriptor serves any number of tapes.

struct Linear {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;

  void init(ParamStore& store, std::uint64_t seed) const;  // <name>.W [in x out], <name>.b [out]
  Var operator()(ParamBinding& p, Var x) const;
};

struct LstmState {
  Var h;  // [batch x hidden]
  Var c;  // [batch x hidden]
};

// Gate columns are laid out [input | forget | cell | output].
struct LstmCell {
  std::string name;
  std::size_t in = 0;
  std::size_t hidden = 0;

  // <name>.Wx [in x 4h], <name>.Wh [h x 4h], <name>.b [4h]; the forget-gate
  // slice of the bias starts at 1.0.
  void init(ParamStore& store, std::uint64_t seed) const;
  LstmState zero_state(Tape& tape, std::size_t batch) const;
};

// One LSTM step. `extra_gates` ([batch x 4h]) is added to the gate
// pre-activations after the bias; a zero term leaves the result bit-identical.
LstmState lstm_step(ParamBinding& p, const LstmCell& cell, Var x, const LstmState& state,
                    std::optional<Var> extra_gates = std::nullopt);

// Stacked bidirectional LSTM: layer i has cells <name>.l<i>.fwd and .bwd;
// layers above the first consume the 2h-wide output of the layer below.
struct BiLstm {
  std::string name;
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t layers = 1;

  LstmCell cell(std::size_t layer, bool forward) const;
  void init(ParamStore& store, std::uint64_t seed) const;
};

struct BiLstmOutput {
  std::vector<Var> steps;  // per step [batch x 2h] = [forward h | backward h]
  Var fwd_final;           // forward state after the last valid step
  Var bwd_final;           // backward state after step 0
};

// Runs the stack over `seq`. With `lengths` (one per batch row), steps at or
// beyond a row's length leave that row's state untouched in both directions.
BiLstmOutput bilstm_encode(ParamBinding& p, const BiLstm& net, std::span<const Var> seq,
                           std::span<const std::size_t> lengths = {});

}  // namespace skelgen::ad
