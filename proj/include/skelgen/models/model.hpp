// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "skelgen/autodiff/layers.hpp"
#include "skelgen/corpus/batch.hpp"
#include "skelgen/models/config.hpp"

namespace skelgen::models {

using ad::ParamBinding;
using ad::Var;
inline constexpr std::size_t kSlots = corpus::kSteps;  // skeleton length k_len

// Creates the variant's parameters. Shared components carry the same names
// in every variant, so stores built from one seed agree on them.
void init_params(const ModelConfig& cfg, ad::ParamStore& store);

// Sentence rows follow the batch layout r = b * 5 + t.
struct GlocalContext {
  Var local;   // l_t  [R x D]
  Var global;  // g_t  [R x 2h]
};
GlocalContext encode_glocal(ParamBinding& p, const ModelConfig& cfg,
                            std::span<const ad::Tensor> features);

struct DecoderOutput {
  Var logits;   // [R*T x V], row r*T + j predicts target j of sentence r
  Var final_h;  // [R x h], decoder state after the sentence's last input
  Var loss;     // mean cross entropy over non-padding targets
};

// Teacher-forced decoder. Each step sees [previous word, l_t, g_t]; `cond`
// ([R x c]) enters the gates through its own weight matrix dec.Wc.
DecoderOutput decode(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                     const corpus::Batch& batch, std::optional<Var> cond);
DecoderOutput decode_baseline(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                              const corpus::Batch& batch);
DecoderOutput decode_skeleton_informed(ParamBinding& p, const ModelConfig& cfg,
                                       const GlocalContext& ctx, const corpus::Batch& batch);

struct MtgLosses {
  Var story;     // L1
  Var skeleton;  // L2
  Var total;     // alpha * L1 + (1 - alpha) * L2
  Var logits;
  Var skeleton_logits;  // [R x classes]
};
MtgLosses mtg_forward_loss(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                           const corpus::Batch& batch, double alpha);

// A_w = softmax over words of H~_w . H_k^T. h_w_tilde [R x n x 2h],
// h_k [R x k x 2h]; mask [R x n x k] marks real words.
Var local_attention(Var h_w_tilde, Var h_k, std::span<const std::uint8_t> mask = {});
// A_s = softmax over slots of H_s . H_k^T. h_s [R x 2h] -> [R x k].
Var global_attention(Var h_s, Var h_k);

struct GlocalParts {
  Var h_k;  // [R x k x 2h]
  Var h_w;  // [R x n x 2h]
  Var a_w;  // [R x n x k]
  Var p_w;  // [R x attn]
  Var h_s;  // [R x 2h]
  Var a_s;  // [R x k]
  Var cond; // [R x (attn + k)]
};
GlocalParts glocal_attention(ParamBinding& p, const ModelConfig& cfg, const corpus::Batch& batch);

struct GlocalOutput {
  DecoderOutput dec;
  GlocalParts parts;
};
GlocalOutput glocal_forward(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                            const corpus::Batch& batch);

// Per-row attention maps copied off the tape.
struct AttentionMaps {
  std::size_t rows = 0;
  std::size_t words = 0;                 // n, padded
  std::vector<std::size_t> lengths;      // real words per row
  std::vector<double> a_w;               // [rows x n x k]
  std::vector<double> a_s;               // [rows x k]

  double word(std::size_t r, std::size_t w, std::size_t k) const {
    return a_w[(r * words + w) * kSlots + k];
  }
  double slot(std::size_t r, std::size_t k) const { return a_s[r * kSlots + k]; }
  // Rows [first, first + 5) of one story.
  AttentionMaps story(std::size_t b) const;
};
AttentionMaps attention_maps(const GlocalParts& parts, const corpus::Batch& batch);

struct ForwardResult {
  Var loss;                          // what training minimizes
  Var story_loss;                    // L1
  std::optional<Var> skeleton_loss;  // L2 (MTG)
  Var logits;
  std::optional<AttentionMaps> attention;
};
ForwardResult forward(ParamBinding& p, const ModelConfig& cfg, const corpus::Batch& batch);

struct GenerateOptions {
  std::size_t max_len = 20;
  bool sample = false;       // temperature sampling instead of greedy argmax
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct GeneratedStory {
  std::size_t source = 0;
  std::vector<std::vector<std::size_t>> sentences;  // 5 token-id lists, no EOS
  std::optional<AttentionMaps> attention;           // glocal: 5 rows
  std::vector<std::size_t> predicted_skeleton;      // MTG: class per sentence
};

// Decodes every story of the batch. PAD, BOS and EOS are never emitted as a
// sentence's first token, and a sentence stops at EOS or after max_len tokens.
std::vector<GeneratedStory> generate_story(const ad::ParamStore& params, const ModelConfig& cfg,
                                           const corpus::Batch& batch,
                                           const GenerateOptions& opts = {});

}  // namespace skelgen::models
