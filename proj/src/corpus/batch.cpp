// SPDX-License-Identifier: Apache-2.0
#include "skelgen/corpus/batch.hpp"

#include <algorithm>
#include <numeric>

#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::corpus {

std::vector<EncodedStory> encode_corpus(const std::vector<Story>& stories, const Vocab& vocab,
                                        const SkeletonVocab& sk_vocab,
                                        const skeleton::Lexicons& lex, const EncodeOptions& opts) {
  auto clip = [&](std::vector<std::size_t> ids) {
    if (opts.max_sentence_len && ids.size() > opts.max_sentence_len) ids.resize(opts.max_sentence_len);
    return ids;
  };
  std::vector<EncodedStory> out;
  out.reserve(stories.size());
  for (std::size_t i = 0; i < stories.size(); ++i) {
    const Story filled = fill_missing_dii(stories[i], opts.dii_policy);
    if (filled.steps.size() != kSteps) {
      throw ValidationError("story '" + filled.id + "' does not have " + std::to_string(kSteps) +
                            " steps");
    }
    EncodedStory e;
    e.source = i;
    for (const auto& step : filled.steps) {
      e.features.push_back(step.image_features);
      e.sis.push_back(clip(vocab.encode(step.sis)));
      e.dii.push_back(clip(vocab.encode(*step.dii)));
    }
    e.skeleton = skeleton_classes(central_chain(filled, lex), opts.repr, sk_vocab, lex);
    out.push_back(std::move(e));
  }
  return out;
}

Batch make_batch(const std::vector<EncodedStory>& data, const std::vector<std::size_t>& members) {
  if (members.empty()) throw ValidationError("empty batch");
  Batch b;
  b.size = members.size();
  const std::size_t dim = data.at(members[0]).features.at(0).size();
  for (std::size_t t = 0; t < kSteps; ++t) b.features.emplace_back(ad::Shape{b.size, dim});

  for (auto m : members) {
    const auto& s = data.at(m);
    for (std::size_t t = 0; t < kSteps; ++t) {
      b.dec_len = std::max(b.dec_len, s.sis[t].size() + 1);
      b.dii_len = std::max(b.dii_len, s.dii[t].size());
    }
  }
  b.dii_len = std::max<std::size_t>(b.dii_len, 1);
  const std::size_t rows = b.rows();
  b.dec_input.assign(rows * b.dec_len, Vocab::kPad);
  b.dec_target.assign(rows * b.dec_len, kIgnoreIndex);
  b.dec_lengths.assign(rows, 0);
  b.dii.assign(rows * b.dii_len, Vocab::kPad);
  b.dii_lengths.assign(rows, 0);
  b.skeleton.assign(b.size * kSteps, 0);

  for (std::size_t bi = 0; bi < b.size; ++bi) {
    const auto& s = data[members[bi]];
    b.stories.push_back(s.source);
    for (std::size_t t = 0; t < kSteps; ++t) {
      if (s.features[t].size() != dim) {
        throw ValidationError("image feature dimension " + std::to_string(s.features[t].size()) +
                              " differs from " + std::to_string(dim) + " within a batch");
      }
      std::copy(s.features[t].begin(), s.features[t].end(),
                b.features[t].data().begin() + static_cast<std::ptrdiff_t>(bi * dim));
      const std::size_t r = bi * kSteps + t;
      const auto& words = s.sis[t];
      b.dec_input[r * b.dec_len] = Vocab::kBos;
      for (std::size_t j = 0; j < words.size(); ++j) {
        b.dec_input[r * b.dec_len + j + 1] = words[j];
        b.dec_target[r * b.dec_len + j] = static_cast<std::int64_t>(words[j]);
      }
      b.dec_target[r * b.dec_len + words.size()] = static_cast<std::int64_t>(Vocab::kEos);
      b.dec_lengths[r] = words.size() + 1;
      const auto& dii = s.dii[t];
      std::copy(dii.begin(), dii.end(), b.dii.begin() + static_cast<std::ptrdiff_t>(r * b.dii_len));
      b.dii_lengths[r] = std::max<std::size_t>(dii.size(), 1);
      b.skeleton[bi * kSteps + t] = s.skeleton[t];
    }
  }
  return b;
}

std::vector<Batch> make_batches(const std::vector<EncodedStory>& data, std::size_t batch_size,
                                std::uint64_t seed, std::size_t epoch) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed * 0x9e3779b97f4a7c15ULL + epoch + 1);
  rng.shuffle(order.begin(), order.end());
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(data, {order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end)}));
  }
  return out;
}

}  // namespace skelgen::corpus
