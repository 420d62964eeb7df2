// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skelgen/skeleton/extract.hpp"

namespace skelgen::corpus {

using skeleton::Sentence;
inline constexpr std::size_t kSteps = skeleton::kStoryLength;

struct StoryStep {
  std::vector<double> image_features;
  std::optional<Sentence> dii;
  Sentence sis;
};

struct Story {
  std::string id;
  std::vector<StoryStep> steps;  // exactly kSteps once validated
  std::optional<std::vector<skeleton::CorefChain>> gold_chains;

  std::vector<Sentence> sis() const;
};

enum class DiiPolicy { kCopySis, kPlaceholder, kProvided };
std::string_view to_string(DiiPolicy p);
std::optional<DiiPolicy> parse_dii_policy(std::string_view s);
inline constexpr std::string_view kPlaceholderToken = "<unk>";

struct LoadOptions {
  std::size_t feature_dim = 0;  // 0: take the first story's dimension
  bool strict = false;          // malformed lines throw instead of being skipped
};

struct LoadResult {
  std::vector<Story> stories;
  std::vector<std::string> warnings;  // "line N: ..." for skipped lines
};

// JSON lines, one story per line:
//   {"id": str, "steps": [{"image_features": [D numbers], "dii": str|null,
//    "sis": str} x 5], "chains": [[{"sentence", "start", "end", "text"?,
//    "pronoun"?}]]?}
// Duplicate ids are always fatal.
LoadResult load_corpus(const std::filesystem::path& path, const LoadOptions& opts,
                       const skeleton::Lexicons& lex = skeleton::Lexicons::builtin());
LoadResult parse_corpus(std::string_view content, const LoadOptions& opts,
                        const skeleton::Lexicons& lex = skeleton::Lexicons::builtin());
Story parse_story(std::string_view line, std::size_t feature_dim, const skeleton::Lexicons& lex);
std::string story_to_json(const Story& story);
void save_corpus(const std::filesystem::path& path, const std::vector<Story>& stories);

Story fill_missing_dii(Story story, DiiPolicy policy);

// Gold chains when the corpus provides them, otherwise the rule-based
// resolver over the SIS sentences; then the central chain.
std::optional<skeleton::CorefChain> central_chain(const Story& story,
                                                  const skeleton::Lexicons& lex);

struct CorpusStats {
  std::size_t stories = 0;
  std::size_t images = 0;
  std::size_t missing_dii = 0;
  std::size_t sis_tokens = 0;
};
CorpusStats corpus_stats(const std::vector<Story>& stories);

}  // namespace skelgen::corpus
