// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "skelgen/autodiff/tensor.hpp"
#include "skelgen/corpus/vocab.hpp"

namespace skelgen::corpus {

inline constexpr std::int64_t kIgnoreIndex = -1;

struct EncodedStory {
  std::size_t source = 0;                          // index into the story list
  std::vector<std::vector<double>> features;       // kSteps x D
  std::vector<std::vector<std::size_t>> sis;       // kSteps sentences, no BOS/EOS
  std::vector<std::vector<std::size_t>> dii;       // kSteps sentences, never empty
  SkeletonClasses skeleton{};
};

struct EncodeOptions {
  skeleton::Repr repr = skeleton::Repr::kSurface;
  DiiPolicy dii_policy = DiiPolicy::kCopySis;
  std::size_t max_sentence_len = 0;  // SIS/DII truncation, 0 = none
};

std::vector<EncodedStory> encode_corpus(const std::vector<Story>& stories, const Vocab& vocab,
                                        const SkeletonVocab& sk_vocab,
                                        const skeleton::Lexicons& lex, const EncodeOptions& opts);

// A padded batch. Sentence rows are flattened as r = b * kSteps + t.
struct Batch {
  std::size_t size = 0;                        // B
  std::vector<std::size_t> stories;            // source index per b
  std::vector<ad::Tensor> features;            // kSteps x [B x D]

  std::size_t dec_len = 0;                     // T = longest SIS + 1
  std::vector<std::size_t> dec_input;          // [R x T]: BOS w1 .. wn PAD ..
  std::vector<std::int64_t> dec_target;        // [R x T]: w1 .. wn EOS ignore ..
  std::vector<std::size_t> dec_lengths;        // [R]: n + 1

  std::size_t dii_len = 0;                     // longest DII
  std::vector<std::size_t> dii;                // [R x dii_len], PAD padded
  std::vector<std::size_t> dii_lengths;        // [R]

  std::vector<std::size_t> skeleton;           // [B x kSteps] class per slot

  std::size_t rows() const { return size * kSteps; }
};

Batch make_batch(const std::vector<EncodedStory>& data, const std::vector<std::size_t>& members);

// Shuffled with a generator seeded by (seed, epoch); the last batch may be short.
std::vector<Batch> make_batches(const std::vector<EncodedStory>& data, std::size_t batch_size,
                                std::uint64_t seed, std::size_t epoch);

}  // namespace skelgen::corpus
