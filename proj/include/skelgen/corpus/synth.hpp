// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "skelgen/corpus/corpus.hpp"

namespace skelgen::corpus {

// Planted synthetic corpus. Every story revolves around one entity noun that
// appears in each SIS sentence, so the central chain covers all five slots
// and its surface word is the entity. Each DII names the entity among
// distractor nouns at a random position. Image features are seeded noise
// that carries no information about the entity.
struct SynthOptions {
  std::size_t stories = 200;
  std::size_t feature_dim = 64;
  std::size_t distractors = 2;        // extra nouns per DII
  double missing_dii_rate = 0.0;      // fraction of steps written with "dii": null
  std::uint64_t seed = 1;
  std::string id_prefix = "synth";
};

std::vector<Story> make_planted_corpus(const SynthOptions& opts);

// Entity nouns the generator draws from.
const std::vector<std::string>& planted_entities();

}  // namespace skelgen::corpus
