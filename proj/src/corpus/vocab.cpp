// SPDX-License-Identifier: Apache-2.0
#include "skelgen/corpus/vocab.hpp"

#include <algorithm>

#include "skelgen/error.hpp"
#include "skelgen/text.hpp"

namespace skelgen::corpus {

namespace {

const std::vector<std::string> kReservedTokens = {"<pad>", "<bos>", "<eos>", "<unk>"};

// Most frequent first, ties alphabetical.
std::vector<std::string> ranked(const std::map<std::string, std::size_t>& counts,
                                std::size_t min_count, std::size_t limit) {
  std::vector<std::pair<std::string, std::size_t>> items;
  for (const auto& [tok, n] : counts)
    if (n >= min_count) items.emplace_back(tok, n);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (limit && items.size() > limit) items.resize(limit);
  std::vector<std::string> out;
  for (auto& [tok, n] : items) out.push_back(std::move(tok));
  return out;
}

}  // namespace

Vocab::Vocab() : tokens_(kReservedTokens) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < kReserved ||
      !std::equal(kReservedTokens.begin(), kReservedTokens.end(), tokens.begin())) {
    throw ValidationError("vocabulary must start with the reserved tokens <pad> <bos> <eos> <unk>");
  }
  Vocab v;
  v.tokens_ = tokens;
  v.index_.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], i).second) {
      throw ValidationError("duplicate vocabulary token '" + tokens[i] + "'");
    }
  }
  return v;
}

Vocab Vocab::build(const std::vector<Story>& stories, std::size_t min_count,
                   std::size_t max_size) {
  if (stories.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  auto add = [&](const Sentence& s) {
    for (const auto& t : s) ++counts[text::lowercase(t)];
  };
  for (const auto& story : stories) {
    for (const auto& step : story.steps) {
      add(step.sis);
      if (step.dii) add(*step.dii);
    }
  }
  for (const auto& r : kReservedTokens) counts.erase(r);
  auto tokens = kReservedTokens;
  for (auto& t : ranked(counts, std::max<std::size_t>(min_count, 1), max_size))
    tokens.push_back(std::move(t));
  return from_tokens(tokens);
}

std::size_t Vocab::index(std::string_view token) const {
  auto it = index_.find(text::lowercase(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocab::encode(const Sentence& s) const {
  std::vector<std::size_t> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(index(t));
  return out;
}

Sentence Vocab::decode(const std::vector<std::size_t>& ids) const {
  Sentence out;
  for (auto id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(token(id));
  }
  return out;
}

SkeletonVocab SkeletonVocab::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.empty() || tokens[0] != "<unk>") {
    throw ValidationError("skeleton vocabulary must start with <unk>");
  }
  SkeletonVocab v;
  v.tokens_ = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], i).second) {
      throw ValidationError("duplicate skeleton vocabulary token '" + tokens[i] + "'");
    }
  }
  return v;
}

SkeletonVocab SkeletonVocab::build(const std::vector<Story>& stories, std::size_t k,
                                   const skeleton::Lexicons& lex) {
  std::map<std::string, std::size_t> counts;
  for (const auto& story : stories) {
    const auto chain = central_chain(story, lex);
    if (!chain) continue;
    for (const auto& head : skeleton::surface_heads(*chain))
      if (head) ++counts[*head];
  }
  counts.erase("<unk>");
  std::vector<std::string> tokens{"<unk>"};
  for (auto& t : ranked(counts, 1, k)) tokens.push_back(std::move(t));
  return from_tokens(tokens);
}

std::size_t SkeletonVocab::index(std::string_view head) const {
  auto it = index_.find(text::lowercase(head));
  return it == index_.end() ? kUnk : it->second;
}

std::size_t skeleton_class_count(skeleton::Repr repr, const SkeletonVocab& vocab) {
  switch (repr) {
    case skeleton::Repr::kSurface: return vocab.size() + 1;
    case skeleton::Repr::kNominalized: return 4;
    case skeleton::Repr::kAbstract: return 5;
  }
  return vocab.size() + 1;
}

SkeletonClasses skeleton_classes(const std::optional<skeleton::CorefChain>& chain,
                                 skeleton::Repr repr, const SkeletonVocab& vocab,
                                 const skeleton::Lexicons& lex) {
  SkeletonClasses out{};
  if (!chain) return out;
  switch (repr) {
    case skeleton::Repr::kSurface: {
      const auto heads = skeleton::surface_heads(*chain);
      for (std::size_t s = 0; s < kSteps; ++s)
        if (heads[s]) out[s] = 1 + vocab.index(*heads[s]);
      break;
    }
    case skeleton::Repr::kNominalized: {
      const auto slots = std::get<skeleton::NominalSlots>(skeleton::to_nominalized(*chain).slots);
      for (std::size_t s = 0; s < kSteps; ++s) {
        const auto [h, p] = slots[s];
        out[s] = h ? (p ? 2 : 1) : (p ? 3 : 0);
      }
      break;
    }
    case skeleton::Repr::kAbstract: {
      const auto slots = std::get<skeleton::AbstractSlots>(skeleton::to_abstract(*chain, lex).slots);
      for (std::size_t s = 0; s < kSteps; ++s)
        if (slots[s]) out[s] = 1 + static_cast<std::size_t>(*slots[s]);
      break;
    }
  }
  return out;
}

std::string skeleton_class_label(std::size_t cls, skeleton::Repr repr, const SkeletonVocab& vocab) {
  if (cls == 0) return repr == skeleton::Repr::kNominalized ? "[0,0]" : "None";
  switch (repr) {
    case skeleton::Repr::kSurface: return vocab.tokens().at(cls - 1);
    case skeleton::Repr::kNominalized: {
      static const char* labels[] = {"[0,0]", "[1,0]", "[1,1]", "[0,1]"};
      return labels[cls];
    }
    case skeleton::Repr::kAbstract:
      return std::string(skeleton::to_string(static_cast<skeleton::Category>(cls - 1)));
  }
  return "None";
}

}  // namespace skelgen::corpus
