// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "skelgen/corpus/corpus.hpp"

namespace skelgen::corpus {

// Word vocabulary over lowercased SIS and DII tokens.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0, kBos = 1, kEos = 2, kUnk = 3, kReserved = 4;

  Vocab();
  // Tokens seen at least min_count times, most frequent first (ties
  // alphabetical), at most max_size of them (0 = unlimited) on top of the
  // reserved entries. Throws ValidationError on an empty corpus.
  static Vocab build(const std::vector<Story>& stories, std::size_t min_count,
                     std::size_t max_size);
  static Vocab from_tokens(const std::vector<std::string>& tokens);  // full list incl. reserved

  std::size_t size() const { return tokens_.size(); }
  std::size_t index(std::string_view token) const;  // lowercases; kUnk if absent
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(const Sentence& s) const;
  // Stops at EOS; drops PAD and BOS.
  Sentence decode(const std::vector<std::size_t>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Skeleton-word vocabulary: UNK plus the k most frequent central-chain head
// tokens of the training corpus, most frequent first, ties alphabetical.
class SkeletonVocab {
 public:
  static constexpr std::size_t kUnk = 0;

  SkeletonVocab() : tokens_{"<unk>"} {}
  static SkeletonVocab build(const std::vector<Story>& stories, std::size_t k,
                             const skeleton::Lexicons& lex);
  static SkeletonVocab from_tokens(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t index(std::string_view head) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Per-sentence skeleton classes as the models consume them. Class 0 is
// always "no mention".
//  surface:     0 None, 1 + SkeletonVocab index
//  nominalized: 0 = [0,0], 1 = [1,0], 2 = [1,1]; 3 stands for the invalid [0,1]
//  abstract:    0 None, 1 + Category
using SkeletonClasses = std::array<std::size_t, kSteps>;
std::size_t skeleton_class_count(skeleton::Repr repr, const SkeletonVocab& vocab);
SkeletonClasses skeleton_classes(const std::optional<skeleton::CorefChain>& chain,
                                 skeleton::Repr repr, const SkeletonVocab& vocab,
                                 const skeleton::Lexicons& lex);
// Label of a class, for attention exports and reports.
std::string skeleton_class_label(std::size_t cls, skeleton::Repr repr, const SkeletonVocab& vocab);

}  // namespace skelgen::corpus
