// SPDX-License-Identifier: Apache-2.0
#include "skelgen/corpus/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::corpus {

namespace {

// None of these are lexicon nouns, pronouns or determiners.
const std::vector<std::string> kVerbs = {"jumped", "smiled", "waited", "rested", "played",
                                         "glowed", "spun",   "stood",  "moved",  "shined"};
const std::vector<std::string> kAdverbs = {"happily", "quietly", "outside", "slowly",
                                           "twice",   "loudly",  "gently",  "brightly"};

}  // namespace

const std::vector<std::string>& planted_entities() {
  static const std::vector<std::string> e = {"dog",  "cake", "bride", "park", "beach", "car",
                                             "boat", "horse", "baby", "tree", "ball",  "bird"};
  return e;
}

std::vector<Story> make_planted_corpus(const SynthOptions& opts) {
  const auto& entities = planted_entities();
  if (opts.distractors + 1 > entities.size()) {
    throw ValidationError("too many distractors for the planted entity list");
  }
  if (opts.feature_dim == 0) throw ValidationError("feature dimension must be positive");
  Rng rng(opts.seed);
  std::vector<Story> out;
  out.reserve(opts.stories);
  for (std::size_t i = 0; i < opts.stories; ++i) {
    Story story;
    char id[32];
    std::snprintf(id, sizeof id, "-%05zu", i);
    story.id = opts.id_prefix + id;
    const std::string& entity = entities[rng.below(entities.size())];
    for (std::size_t t = 0; t < kSteps; ++t) {
      StoryStep step;
      step.image_features.resize(opts.feature_dim);
      for (auto& v : step.image_features) v = rng.normal();
      step.sis = {"the", entity, kVerbs[rng.below(kVerbs.size())],
                  kAdverbs[rng.below(kAdverbs.size())], "."};

      std::vector<std::string> nouns{entity};
      while (nouns.size() < opts.distractors + 1) {
        const auto& d = entities[rng.below(entities.size())];
        if (std::find(nouns.begin(), nouns.end(), d) == nouns.end()) nouns.push_back(d);
      }
      rng.shuffle(nouns.begin(), nouns.end());
      Sentence dii;
      for (std::size_t n = 0; n < nouns.size(); ++n) {
        if (n > 0) dii.push_back(n + 1 == nouns.size() ? "and" : "with");
        dii.push_back("a");
        dii.push_back(nouns[n]);
      }
      if (rng.uniform() >= opts.missing_dii_rate) step.dii = std::move(dii);
      story.steps.push_back(std::move(step));
    }
    out.push_back(std::move(story));
  }
  return out;
}

}  // namespace skelgen::corpus
