// SPDX-License-Identifier: Apache-2.0
#include "skelgen/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skelgen/autodiff/ops.hpp"
#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::models {

using ad::Shape;
using ad::Tensor;
using corpus::Vocab;

namespace {

struct Layers {
  ad::BiLstm img_enc;
  ad::LstmCell dec;       // word-embedding input; context enters via dec.Wctx
  ad::Linear out;
  ad::Linear mtg_head;
  ad::BiLstm sk_enc;
  ad::BiLstm dii_enc;
  ad::BiLstm sent_enc;
  ad::Linear hw_proj;
  ad::Linear pw_proj;
  std::size_t ctx_dim;
  std::size_t cond_dim;
};

Layers layers(const ModelConfig& c) {
  const std::size_t h = c.hidden_dim, h2 = 2 * c.hidden_dim;
  Layers l{
      {"img_enc", c.image_dim, h, c.encoder_layers},
      {"dec", c.embed_dim, h},
      {"out", h, c.vocab_size},
      {"mtg_head", h, c.skeleton_classes},
      {"sk_enc", c.embed_dim, h, 1},
      {"dii_enc", c.embed_dim, h, 1},
      {"sent_enc", h2 + c.attn_dim, h, 1},
      {"hw_proj", h2, h2},
      {"pw_proj", kSlots * h2, c.attn_dim},
      c.image_dim + h2,
      0,
  };
  if (c.variant == Variant::kSkeletonInformed) l.cond_dim = c.embed_dim;
  if (c.variant == Variant::kGlocal) l.cond_dim = c.attn_dim + kSlots;
  return l;
}

std::vector<std::size_t> column(const std::vector<std::size_t>& m, std::size_t rows,
                                std::size_t cols, std::size_t j) {
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = m[r * cols + j];
  return out;
}

// Context and conditioning terms of the decoder gates, fixed per sentence.
Var gate_bias(ParamBinding& p, const GlocalContext& ctx, std::optional<Var> cond) {
  const Var parts[] = {ctx.local, ctx.global};
  Var g = ad::matmul(ad::concat_cols(parts), p("dec.Wctx"));
  if (cond) g = ad::add(g, ad::matmul(*cond, p("dec.Wc")));
  return g;
}

std::optional<Var> conditioning(ParamBinding& p, const ModelConfig& cfg,
                                const corpus::Batch& batch, GlocalParts* parts) {
  switch (cfg.variant) {
    case Variant::kSkeletonInformed:
      return ad::embedding(p("sk_emb"), batch.skeleton);
    case Variant::kGlocal: {
      GlocalParts g = glocal_attention(p, cfg, batch);
      if (parts) *parts = g;
      return g.cond;
    }
    default:
      return std::nullopt;
  }
}

void check_ready(const ModelConfig& cfg) {
  cfg.validate();
  if (cfg.vocab_size <= Vocab::kReserved) {
    throw ValidationError("model.vocab_size must exceed the reserved tokens");
  }
  if (cfg.uses_skeleton() && cfg.skeleton_classes == 0) {
    throw ValidationError("model.skeleton_classes is unset");
  }
}

}  // namespace

void init_params(const ModelConfig& cfg, ad::ParamStore& store) {
  check_ready(cfg);
  const Layers l = layers(cfg);
  const auto seed = cfg.seed;
  store.create("word_emb", {cfg.vocab_size, cfg.embed_dim}, cfg.embed_dim, seed);
  l.img_enc.init(store, seed);
  l.dec.init(store, seed);
  store.create("dec.Wctx", {l.ctx_dim, 4 * cfg.hidden_dim}, l.ctx_dim, seed);
  l.out.init(store, seed);
  if (l.cond_dim) store.create("dec.Wc", {l.cond_dim, 4 * cfg.hidden_dim}, l.cond_dim, seed);
  if (cfg.variant == Variant::kSkeletonInformed || cfg.variant == Variant::kGlocal) {
    store.create("sk_emb", {cfg.skeleton_classes, cfg.embed_dim}, cfg.embed_dim, seed);
  }
  if (cfg.variant == Variant::kMtg) l.mtg_head.init(store, seed);
  if (cfg.variant == Variant::kGlocal) {
    l.sk_enc.init(store, seed);
    l.dii_enc.init(store, seed);
    l.sent_enc.init(store, seed);
    l.hw_proj.init(store, seed);
    l.pw_proj.init(store, seed);
  }
}

GlocalContext encode_glocal(ParamBinding& p, const ModelConfig& cfg,
                            std::span<const Tensor> features) {
  if (features.size() != kSlots) {
    throw ShapeError("encode_glocal: expected " + std::to_string(kSlots) + " image steps, got " +
                     std::to_string(features.size()));
  }
  std::vector<Var> steps;
  for (const auto& f : features) {
    if (f.rank() != 2 || f.dim(1) != cfg.image_dim) {
      throw ShapeError("encode_glocal: image features " + ad::to_string(f.shape()) +
                       " do not match configured image_dim " + std::to_string(cfg.image_dim));
    }
    steps.push_back(p.tape().constant(f));
  }
  const std::size_t b = features[0].dim(0), rows = b * kSlots;
  const auto enc = ad::bilstm_encode(p, layers(cfg).img_enc, steps);
  return {ad::reshape(ad::stack_steps(steps), {rows, cfg.image_dim}),
          ad::reshape(ad::stack_steps(enc.steps), {rows, 2 * cfg.hidden_dim})};
}

DecoderOutput decode(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                     const corpus::Batch& batch, std::optional<Var> cond) {
  const Layers l = layers(cfg);
  const std::size_t rows = batch.rows(), T = batch.dec_len;
  if (ctx.local.dim(0) != rows) {
    throw ShapeError("decode: context has " + std::to_string(ctx.local.dim(0)) +
                     " rows, batch has " + std::to_string(rows));
  }
  if (cond && (cond->dim(0) != rows || cond->dim(1) != l.cond_dim)) {
    throw ShapeError("decode: conditioning " + ad::to_string(cond->shape()) + " expected [" +
                     std::to_string(rows) + "x" + std::to_string(l.cond_dim) + "]");
  }
  const Var extra = gate_bias(p, ctx, cond);
  const Var table = p("word_emb");
  ad::LstmState state = l.dec.zero_state(p.tape(), rows);
  std::vector<Var> hs;
  std::vector<std::uint8_t> keep(rows);
  for (std::size_t j = 0; j < T; ++j) {
    const auto idx = column(batch.dec_input, rows, T, j);
    ad::LstmState next = ad::lstm_step(p, l.dec, ad::embedding(table, idx), state, extra);
    hs.push_back(next.h);
    bool all = true;
    for (std::size_t r = 0; r < rows; ++r) {
      keep[r] = j < batch.dec_lengths[r];
      all = all && keep[r];
    }
    state = all ? next
                : ad::LstmState{ad::where_rows(keep, next.h, state.h),
                                ad::where_rows(keep, next.c, state.c)};
  }
  Var flat = ad::reshape(ad::stack_steps(hs), {rows * T, cfg.hidden_dim});
  Var logits = l.out(p, flat);
  Var loss = ad::cross_entropy(logits, batch.dec_target, corpus::kIgnoreIndex);
  return {logits, state.h, loss};
}

DecoderOutput decode_baseline(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                              const corpus::Batch& batch) {
  return decode(p, cfg, ctx, batch, std::nullopt);
}

DecoderOutput decode_skeleton_informed(ParamBinding& p, const ModelConfig& cfg,
                                       const GlocalContext& ctx, const corpus::Batch& batch) {
  if (batch.skeleton.size() != batch.rows()) {
    throw ShapeError("decode_skeleton_informed: " + std::to_string(batch.skeleton.size()) +
                     " skeleton slots for " + std::to_string(batch.rows()) + " sentences");
  }
  for (auto k : batch.skeleton) {
    if (k >= cfg.skeleton_classes) {
      throw ValidationError("skeleton class " + std::to_string(k) + " out of range " +
                            std::to_string(cfg.skeleton_classes));
    }
  }
  return decode(p, cfg, ctx, batch, ad::embedding(p("sk_emb"), batch.skeleton));
}

MtgLosses mtg_forward_loss(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                           const corpus::Batch& batch, double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0) {
    throw ValidationError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  const DecoderOutput dec = decode(p, cfg, ctx, batch, std::nullopt);
  const Var sk_logits = layers(cfg).mtg_head(p, dec.final_h);
  std::vector<std::int64_t> targets(batch.skeleton.begin(), batch.skeleton.end());
  const Var l2 = ad::cross_entropy(sk_logits, targets);
  return {dec.loss, l2, ad::weighted_sum(dec.loss, alpha, l2, 1.0 - alpha), dec.logits, sk_logits};
}

Var local_attention(Var h_w_tilde, Var h_k, std::span<const std::uint8_t> mask) {
  if (h_w_tilde.value().rank() != 3 || h_k.value().rank() != 3 ||
      h_w_tilde.dim(0) != h_k.dim(0) || h_w_tilde.dim(2) != h_k.dim(2)) {
    throw ShapeError("local_attention: incompatible shapes " + ad::to_string(h_w_tilde.shape()) +
                     " and " + ad::to_string(h_k.shape()));
  }
  return ad::softmax(ad::bmm(h_w_tilde, ad::transpose_last2(h_k)), 1, mask);
}

Var global_attention(Var h_s, Var h_k) {
  if (h_s.value().rank() != 2 || h_k.value().rank() != 3 || h_s.dim(0) != h_k.dim(0) ||
      h_s.dim(1) != h_k.dim(2)) {
    throw ShapeError("global_attention: incompatible shapes " + ad::to_string(h_s.shape()) +
                     " and " + ad::to_string(h_k.shape()));
  }
  const std::size_t rows = h_s.dim(0), k = h_k.dim(1);
  Var scores = ad::bmm(ad::reshape(h_s, {rows, 1, h_s.dim(1)}), ad::transpose_last2(h_k));
  return ad::reshape(ad::softmax(scores, 2), {rows, k});
}

GlocalParts glocal_attention(ParamBinding& p, const ModelConfig& cfg, const corpus::Batch& batch) {
  const Layers l = layers(cfg);
  const std::size_t B = batch.size, rows = batch.rows(), n = batch.dii_len;
  const std::size_t h2 = 2 * cfg.hidden_dim;
  if (batch.dii.size() != rows * n || batch.dii_lengths.size() != rows) {
    throw ValidationError("glocal_forward: every sentence needs a DII");
  }
  for (auto k : batch.skeleton) {
    if (k >= cfg.skeleton_classes) {
      throw ValidationError("skeleton class " + std::to_string(k) + " out of range " +
                            std::to_string(cfg.skeleton_classes));
    }
  }

  // H_k: Bi-LSTM over the story's five skeleton slots, shared by its rows.
  const Var sk_table = p("sk_emb");
  std::vector<Var> slots;
  for (std::size_t k = 0; k < kSlots; ++k) {
    slots.push_back(ad::embedding(sk_table, column(batch.skeleton, B, kSlots, k)));
  }
  const auto hk_enc = ad::bilstm_encode(p, l.sk_enc, slots);
  std::vector<std::size_t> story_of_row(rows);
  for (std::size_t r = 0; r < rows; ++r) story_of_row[r] = r / kSlots;
  Var h_k = ad::reshape(
      ad::gather_rows(ad::reshape(ad::stack_steps(hk_enc.steps), {B, kSlots * h2}), story_of_row),
      {rows, kSlots, h2});

  // H_w: Bi-LSTM over each sentence's DII words.
  const Var word_table = p("word_emb");
  std::vector<Var> words;
  for (std::size_t j = 0; j < n; ++j) words.push_back(ad::embedding(word_table, column(batch.dii, rows, n, j)));
  const auto hw_enc = ad::bilstm_encode(p, l.dii_enc, words, batch.dii_lengths);
  Var h_w = ad::stack_steps(hw_enc.steps);
  Var h_w_tilde = ad::reshape(ad::tanh(l.hw_proj(p, ad::reshape(h_w, {rows * n, h2}))), {rows, n, h2});

  std::vector<std::uint8_t> mask(rows * n * kSlots);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < kSlots; ++k)
        mask[(r * n + j) * kSlots + k] = j < batch.dii_lengths[r];
  Var a_w = local_attention(h_w_tilde, h_k, mask);

  // P_w: the k attended word vectors, flattened and projected.
  Var attended = ad::bmm(ad::transpose_last2(a_w), h_w);
  Var p_w = l.pw_proj(p, ad::reshape(attended, {rows, kSlots * h2}));

  // H_s: sentence Bi-LSTM over [H_w, P_w].
  std::vector<Var> sent;
  for (std::size_t j = 0; j < n; ++j) {
    const Var parts[] = {hw_enc.steps[j], p_w};
    sent.push_back(ad::concat_cols(parts));
  }
  const auto hs_enc = ad::bilstm_encode(p, l.sent_enc, sent, batch.dii_lengths);
  const Var finals[] = {hs_enc.fwd_final, hs_enc.bwd_final};
  Var h_s = ad::concat_cols(finals);
  Var a_s = global_attention(h_s, h_k);

  const Var cond_parts[] = {p_w, a_s};
  return {h_k, h_w, a_w, p_w, h_s, a_s, ad::concat_cols(cond_parts)};
}

GlocalOutput glocal_forward(ParamBinding& p, const ModelConfig& cfg, const GlocalContext& ctx,
                            const corpus::Batch& batch) {
  GlocalParts parts = glocal_attention(p, cfg, batch);
  DecoderOutput dec = decode(p, cfg, ctx, batch, parts.cond);
  return {dec, parts};
}

AttentionMaps AttentionMaps::story(std::size_t b) const {
  AttentionMaps out;
  out.rows = kSlots;
  out.words = words;
  const auto first = b * kSlots;
  out.lengths.assign(lengths.begin() + static_cast<std::ptrdiff_t>(first),
                     lengths.begin() + static_cast<std::ptrdiff_t>(first + kSlots));
  const auto w0 = a_w.begin() + static_cast<std::ptrdiff_t>(first * words * kSlots);
  out.a_w.assign(w0, w0 + static_cast<std::ptrdiff_t>(kSlots * words * kSlots));
  const auto s0 = a_s.begin() + static_cast<std::ptrdiff_t>(first * kSlots);
  out.a_s.assign(s0, s0 + static_cast<std::ptrdiff_t>(kSlots * kSlots));
  return out;
}

AttentionMaps attention_maps(const GlocalParts& parts, const corpus::Batch& batch) {
  AttentionMaps m;
  m.rows = batch.rows();
  m.words = batch.dii_len;
  m.lengths = batch.dii_lengths;
  const auto w = parts.a_w.value().data();
  const auto s = parts.a_s.value().data();
  m.a_w.assign(w.begin(), w.end());
  m.a_s.assign(s.begin(), s.end());
  return m;
}

ForwardResult forward(ParamBinding& p, const ModelConfig& cfg, const corpus::Batch& batch) {
  check_ready(cfg);
  const GlocalContext ctx = encode_glocal(p, cfg, batch.features);
  switch (cfg.variant) {
    case Variant::kBaseline: {
      auto d = decode_baseline(p, cfg, ctx, batch);
      return {d.loss, d.loss, std::nullopt, d.logits, std::nullopt};
    }
    case Variant::kSkeletonInformed: {
      auto d = decode_skeleton_informed(p, cfg, ctx, batch);
      return {d.loss, d.loss, std::nullopt, d.logits, std::nullopt};
    }
    case Variant::kMtg: {
      auto m = mtg_forward_loss(p, cfg, ctx, batch, cfg.alpha);
      return {m.total, m.story, m.skeleton, m.logits, std::nullopt};
    }
    case Variant::kGlocal: {
      auto g = glocal_forward(p, cfg, ctx, batch);
      return {g.dec.loss, g.dec.loss, std::nullopt, g.dec.logits, attention_maps(g.parts, batch)};
    }
  }
  throw ValidationError("unknown model variant");
}

std::vector<GeneratedStory> generate_story(const ad::ParamStore& params, const ModelConfig& cfg,
                                           const corpus::Batch& batch,
                                           const GenerateOptions& opts) {
  check_ready(cfg);
  if (opts.max_len == 0) throw ValidationError("max_len must be positive");
  if (opts.sample && !(opts.temperature > 0.0)) {
    throw ValidationError("sampling temperature must be positive");
  }
  const Layers l = layers(cfg);
  ad::Tape tape;
  ParamBinding p(tape, params);
  const GlocalContext ctx = encode_glocal(p, cfg, batch.features);
  GlocalParts parts;
  const auto cond = conditioning(p, cfg, batch, &parts);
  const Var extra = gate_bias(p, ctx, cond);
  const Var table = p("word_emb");

  const std::size_t rows = batch.rows(), V = cfg.vocab_size;
  Rng rng(opts.seed);
  std::vector<std::vector<std::size_t>> tokens(rows);
  std::vector<std::size_t> prev(rows, Vocab::kBos);
  std::vector<std::uint8_t> done(rows, 0);
  ad::LstmState state = l.dec.zero_state(tape, rows);
  Var final_h = state.h;
  std::vector<std::uint8_t> active(rows);
  std::vector<double> probs(V);

  for (std::size_t j = 0; j < opts.max_len; ++j) {
    ad::LstmState next = ad::lstm_step(p, l.dec, ad::embedding(table, prev), state, extra);
    const Tensor& logits = l.out(p, next.h).value();
    for (std::size_t r = 0; r < rows; ++r) active[r] = !done[r];
    for (std::size_t r = 0; r < rows; ++r) {
      if (done[r]) continue;
      auto allowed = [&](std::size_t v) {
        return v != Vocab::kPad && v != Vocab::kBos && (j > 0 || v != Vocab::kEos);
      };
      std::size_t pick = 0;
      if (!opts.sample) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < V; ++v) {
          if (allowed(v) && logits[r * V + v] > best) {
            best = logits[r * V + v];
            pick = v;
          }
        }
      } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < V; ++v)
          if (allowed(v)) mx = std::max(mx, logits[r * V + v] / opts.temperature);
        double z = 0;
        for (std::size_t v = 0; v < V; ++v) {
          probs[v] = allowed(v) ? std::exp(logits[r * V + v] / opts.temperature - mx) : 0.0;
          z += probs[v];
        }
        double u = rng.uniform() * z;
        pick = V - 1;
        for (std::size_t v = 0; v < V; ++v) {
          if (probs[v] == 0.0) continue;
          if (u < probs[v]) {
            pick = v;
            break;
          }
          u -= probs[v];
        }
      }
      if (pick == Vocab::kEos) {
        done[r] = 1;
      } else {
        tokens[r].push_back(pick);
        prev[r] = pick;
        if (tokens[r].size() == opts.max_len) done[r] = 1;
      }
    }
    // Rows that finished before this step keep their earlier state.
    state = {ad::where_rows(active, next.h, state.h), ad::where_rows(active, next.c, state.c)};
    final_h = state.h;
    if (std::all_of(done.begin(), done.end(), [](auto d) { return d != 0; })) break;
  }

  std::vector<GeneratedStory> out(batch.size);
  std::optional<AttentionMaps> maps;
  if (cfg.variant == Variant::kGlocal) maps = attention_maps(parts, batch);
  std::optional<Tensor> sk_logits;
  if (cfg.variant == Variant::kMtg) sk_logits = l.mtg_head(p, final_h).value();
  for (std::size_t b = 0; b < batch.size; ++b) {
    auto& g = out[b];
    g.source = batch.stories[b];
    for (std::size_t t = 0; t < kSlots; ++t) g.sentences.push_back(tokens[b * kSlots + t]);
    if (maps) g.attention = maps->story(b);
    if (sk_logits) {
      const std::size_t C = cfg.skeleton_classes;
      for (std::size_t t = 0; t < kSlots; ++t) {
        const std::size_t r = b * kSlots + t;
        std::size_t best = 0;
        for (std::size_t c = 1; c < C; ++c)
          if ((*sk_logits)[r * C + c] > (*sk_logits)[r * C + best]) best = c;
        g.predicted_skeleton.push_back(best);
      }
    }
  }
  return out;
}

}  // namespace skelgen::models
