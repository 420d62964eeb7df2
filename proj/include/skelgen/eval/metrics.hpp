// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skelgen/models/model.hpp"
#include "skelgen/skeleton/extract.hpp"

namespace skelgen::eval {

using skeleton::Sentence;
using StoryText = std::vector<Sentence>;  // five sentences

// Suffix-stripping stemmer used for the second METEOR-lite matching stage.
std::string stem(std::string_view word);

struct MeteorDetail {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

// Unigram METEOR without synonyms: exact matches first, then stem matches;
// F = 10PR / (R + 9P), penalty = 0.5 (chunks / m)^3, score = F (1 - penalty).
// Matching is case-insensitive. Throws ValidationError on an empty reference.
MeteorDetail meteor_lite_detail(std::span<const std::string> hypothesis,
                                std::span<const std::string> reference);
double meteor_lite(std::span<const std::string> hypothesis, std::span<const std::string> reference);

double presence_distance(const skeleton::PresenceVector& a, const skeleton::PresenceVector& b);
// Presence vector of the story's rule-extracted central chain (zeros when
// there is none).
skeleton::PresenceVector story_presence(const StoryText& story, const skeleton::Lexicons& lex);
double skeleton_distance(const StoryText& gold, const StoryText& generated,
                         const skeleton::Lexicons& lex);

// Distinct extracted chains in one story, keyed by head lemma.
std::size_t distinct_entities(const StoryText& story, const skeleton::Lexicons& lex);
double avg_distinct_entities(std::span<const StoryText> stories, const skeleton::Lexicons& lex);

struct TokenCounts {
  std::size_t tokens = 0;
  std::size_t nouns = 0;
  std::size_t pronouns = 0;
};
TokenCounts count_nouns_pronouns(const StoryText& story, const skeleton::Lexicons& lex);

struct NounPronounStats {
  double noun_pct = 0.0;
  double pronoun_pct = 0.0;
};
// Pronouns by lexicon lookup, nouns as the noun tokens of detected mentions;
// both as percentages of all tokens.
NounPronounStats noun_pronoun_stats(std::span<const StoryText> stories,
                                    const skeleton::Lexicons& lex);

struct StoryScore {
  std::string id;
  double meteor = 0.0;  // mean over the five sentences, in [0, 1]
  double distance = 0.0;
  std::size_t entities = 0;            // generated story
  std::size_t reference_entities = 0;
};

struct EvalReport {
  std::size_t stories = 0;
  double meteor_lite = 0.0;  // x100, mean over sentences
  double skeleton_distance = 0.0;
  double avg_distinct_entities = 0.0;
  double reference_avg_distinct_entities = 0.0;
  NounPronounStats generated;
  NounPronounStats reference;
  std::vector<StoryScore> per_story;
};

struct ScoredPair {
  std::string id;
  StoryText reference;
  StoryText generated;
};

struct NamedStory {
  std::string id;
  StoryText sentences;
};
// Pairs generated stories with references by id, in reference order. Ids
// present on one side only are listed in the ValidationError.
std::vector<ScoredPair> align_by_id(std::span<const NamedStory> references,
                                    std::span<const NamedStory> generated);

// Per-story scores are computed in parallel; aggregation is serial and in
// input order, so the report does not depend on the thread count.
EvalReport evaluate(std::span<const ScoredPair> pairs, const skeleton::Lexicons& lex);
std::string report_to_json(const EvalReport& r);
std::string report_table(const EvalReport& r);

// Writes <stem>_sentence.csv (one row per sentence, A_s per slot column)
// and <stem>_word.csv (one row per sentence and DII word, A_w per slot).
// `slot_labels` names the five skeleton columns; `words` (optional) holds
// the DII tokens per sentence.
void export_attention(const models::AttentionMaps& maps, std::span<const std::string> slot_labels,
                      const std::vector<Sentence>& words, const std::filesystem::path& dir,
                      const std::string& stem);

// Mean A_s mass per sentence index attributed to each of the `top` most
// frequent skeleton words, written as a sentence x word CSV.
struct AttentionSummary {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> mass;  // [5][labels]
};
AttentionSummary summarize_attention(std::span<const models::AttentionMaps> maps,
                                     std::span<const std::vector<std::string>> slot_labels,
                                     std::size_t top = 10);
void export_attention_summary(const AttentionSummary& s, const std::filesystem::path& path);

}  // namespace skelgen::eval
