// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "skelgen/corpus/corpus.hpp"
#include "skelgen/corpus/vocab.hpp"
#include "skelgen/skeleton/types.hpp"

namespace skelgen::models {

enum class Variant { kBaseline, kSkeletonInformed, kMtg, kGlocal };
std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view s);

struct ModelConfig {
  Variant variant = Variant::kBaseline;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t image_dim = 64;
  std::size_t attn_dim = 32;
  std::size_t skeleton_vocab_k = 20;
  std::size_t encoder_layers = 2;
  double alpha = 0.5;
  skeleton::Repr skeleton_repr = skeleton::Repr::kSurface;
  std::uint64_t seed = 1;

  // Filled from the corpus before parameters are created.
  std::size_t vocab_size = 0;
  std::size_t skeleton_classes = 0;

  static ModelConfig paper(Variant v);
  static ModelConfig desk(Variant v);

  bool uses_skeleton() const { return variant != Variant::kBaseline; }
  // Throws ValidationError.
  void validate() const;
};

// Everything generation needs besides the parameters; stored as the
// checkpoint's config document.
struct ModelBundle {
  ModelConfig config;
  corpus::Vocab vocab;
  corpus::SkeletonVocab skeleton_vocab;
  corpus::DiiPolicy dii_policy = corpus::DiiPolicy::kCopySis;
  std::size_t max_sentence_len = 0;
};

std::string bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const std::string& s);

}  // namespace skelgen::models
