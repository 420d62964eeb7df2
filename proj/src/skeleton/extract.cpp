// SPDX-License-Identifier: Apache-2.0
#include "skelgen/skeleton/extract.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "skelgen/error.hpp"
#include "skelgen/text.hpp"

namespace skelgen::skeleton {

namespace {

const std::set<std::string, std::less<>>& determiners() {
  static const std::set<std::string, std::less<>> s = {
      "a",    "an",   "the",  "this",    "that", "these", "those",   "some", "every",
      "each", "another", "any", "many", "several", "both", "few", "no",     "my",
      "our",  "your", "his",  "her",     "its",  "their",
  };
  return s;
}

// Closed-class words plus frequent verbs. They end a determiner's noun run
// and are never noun mentions themselves.
const std::set<std::string, std::less<>>& function_words() {
  static const std::set<std::string, std::less<>> s = {
      // prepositions
      "of", "in", "on", "at", "to", "for", "with", "from", "by", "about", "after", "before",
      "during", "into", "over", "under", "around", "through", "up", "down", "out", "off",
      "near", "behind", "across", "along", "inside", "outside", "onto", "toward", "towards",
      // conjunctions and subordinators
      "and", "or", "but", "so", "because", "when", "while", "if", "then", "than", "as",
      "where", "who", "which", "what", "how", "why", "once", "until",
      // auxiliaries and copulas
      "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do",
      "does", "did", "will", "would", "can", "could", "should", "may", "might", "must",
      "'s", "'re", "'m",
      // adverbs and intensifiers
      "very", "too", "also", "just", "really", "already", "always", "never", "not", "there",
      "here", "now", "today", "finally", "again", "all", "still", "even", "more", "most",
      "such", "much", "soon", "later", "together", "first", "last", "next", "lots",
      // frequent verbs
      "got", "get", "gets", "took", "take", "takes", "went", "go", "goes", "came", "come",
      "comes", "made", "make", "makes", "saw", "see", "sees", "ran", "run", "runs", "looked",
      "look", "looks", "said", "say", "says", "felt", "feel", "gave", "give", "found", "find",
      "left", "leave", "began", "started", "decided", "wanted", "loved", "enjoyed", "arrived",
  };
  return s;
}

const std::set<std::string, std::less<>>& possessives() {
  static const std::set<std::string, std::less<>> s = {"my", "our", "your", "his", "her",
                                                       "its", "their"};
  return s;
}

class Detector {
 public:
  Detector(const Lexicons& lex, const Sentence& tokens, std::size_t sentence)
      : lex_(lex), tokens_(tokens), lower_(text::lowercase(tokens)), sentence_(sentence) {}

  std::vector<Mention> run() {
    std::size_t i = 0;
    const std::size_t n = tokens_.size();
    while (i < n) {
      const std::string& w = lower_[i];
      if (text::is_punct(w)) {
        ++i;
      } else if (lex_.is_pronoun(w)) {
        emit_pronoun(i);
        i = possessives().count(w) ? noun_phrase(i, i + 1) : i + 1;
      } else if (determiners().count(w)) {
        i = noun_phrase(i, i + 1);
      } else if (!function_words().count(w) && lex_.known_noun(text::lemma(w)) &&
                 !lex_.is_stop_noun(text::lemma(w))) {
        i = emit_noun(i, i);
      } else {
        ++i;
      }
    }
    return std::move(out_);
  }

 private:
  bool content(std::size_t k) const {
    const std::string& w = lower_[k];
    return !text::is_punct(w) && !lex_.is_pronoun(w) && !determiners().count(w) &&
           !function_words().count(w);
  }

  void emit_pronoun(std::size_t i) {
    Mention m;
    m.sentence = sentence_;
    m.start = i;
    m.end = i + 1;
    m.text = tokens_[i];
    m.head = lower_[i];
    m.is_pronoun = true;
    m.category = pronoun_category(lower_[i]);
    out_.push_back(std::move(m));
  }

  // Noun mention headed at `head`; `phrase_start` is where a coordinated
  // mention's text begins. Returns the index after the consumed tokens.
  std::size_t emit_noun(std::size_t phrase_start, std::size_t head) {
    const std::size_t n = tokens_.size();
    Mention m;
    m.sentence = sentence_;
    m.head = lower_[head];
    m.category = lex_.category_of(text::lemma(m.head));
    m.nouns = 1;
    std::size_t consumed = head + 1;
    if (head + 2 < n && lower_[head + 1] == "and" && content(head + 2)) {
      m.start = phrase_start;
      m.end = head + 3;
      m.text = text::join({tokens_.begin() + static_cast<std::ptrdiff_t>(phrase_start),
                           tokens_.begin() + static_cast<std::ptrdiff_t>(head + 3)});
      m.nouns = 2;
      consumed = head + 3;
    } else {
      m.start = head;
      m.end = head + 1;
      m.text = tokens_[head];
    }
    out_.push_back(std::move(m));
    return consumed;
  }

  std::size_t noun_phrase(std::size_t det, std::size_t from) {
    std::vector<std::size_t> run;
    for (std::size_t k = from; k < tokens_.size() && run.size() < 4 && content(k); ++k) {
      run.push_back(k);
    }
    if (run.empty()) return from;
    std::size_t head = run.back();
    for (auto k : run) {
      const auto lem = text::lemma(lower_[k]);
      if (lex_.known_noun(lem) && !lex_.is_stop_noun(lem)) {
        head = k;
        break;
      }
    }
    if (lex_.is_stop_noun(text::lemma(lower_[head]))) return run.back() + 1;
    return std::max(emit_noun(det, head), run.back() + 1);
  }

  const Lexicons& lex_;
  const Sentence& tokens_;
  std::vector<std::string> lower_;
  std::size_t sentence_;
  std::vector<Mention> out_;
};

}  // namespace

std::size_t CorefChain::covered_sentences() const {
  std::set<std::size_t> s;
  for (const auto& m : mentions) s.insert(m.sentence);
  return s.size();
}

std::vector<Mention> detect_mentions(std::span<const Sentence> sentences, const Lexicons& lex) {
  std::vector<Mention> out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    auto ms = Detector(lex, sentences[s], s).run();
    out.insert(out.end(), std::make_move_iterator(ms.begin()), std::make_move_iterator(ms.end()));
  }
  return out;
}

std::vector<CorefChain> extract_chains(std::span<const Sentence> sentences, const Lexicons& lex) {
  if (sentences.size() != kStoryLength) return {};

  struct Builder {
    CorefChain chain;
    Category category;
    bool noun_chain;
  };
  std::vector<Builder> builders;
  std::map<std::string, std::size_t> by_key;
  std::size_t last_touched_seq = 0;
  std::vector<std::size_t> last_touched;  // per builder, order of most recent mention

  auto append = [&](std::size_t b, Mention m) {
    builders[b].chain.mentions.push_back(std::move(m));
    last_touched[b] = ++last_touched_seq;
  };
  auto find_or_create = [&](const std::string& key, Category cat, bool noun_chain) {
    auto it = by_key.find(key);
    if (it != by_key.end()) return it->second;
    builders.push_back({{}, cat, noun_chain});
    last_touched.push_back(0);
    by_key.emplace(key, builders.size() - 1);
    return builders.size() - 1;
  };
  auto most_recent = [&](auto&& accept) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t b = 0; b < builders.size(); ++b) {
      if (!builders[b].noun_chain || !accept(builders[b].category)) continue;
      if (!best || last_touched[b] > last_touched[*best]) best = b;
    }
    return best;
  };

  for (auto& m : detect_mentions(sentences, lex)) {
    if (!m.is_pronoun) {
      const auto b = find_or_create(text::lemma(m.head), m.category, true);
      append(b, std::move(m));
      continue;
    }
    std::optional<std::size_t> target;
    switch (pronoun_class(m.head)) {
      case PronounClass::kFirstSingular:
        target = find_or_create("#first-singular", Category::kPerson, false);
        break;
      case PronounClass::kFirstPlural:
        target = find_or_create("#first-plural", Category::kPerson, false);
        break;
      case PronounClass::kSecond:
        target = find_or_create("#second", Category::kPerson, false);
        break;
      case PronounClass::kPersonal:
        target = most_recent([](Category c) { return c == Category::kPerson; });
        break;
      case PronounClass::kNeuter:
        target = most_recent(
            [](Category c) { return c == Category::kObject || c == Category::kOther; });
        break;
    }
    if (target) append(*target, std::move(m));
  }

  std::vector<CorefChain> out;
  for (auto& b : builders) {
    if (b.chain.mentions.size() >= 2 && b.chain.covered_sentences() >= 2) {
      out.push_back(std::move(b.chain));
    }
  }
  return out;
}

bool better_chain(const CorefChain& a, const CorefChain& b) {
  const auto ca = a.covered_sentences(), cb = b.covered_sentences();
  if (ca != cb) return ca > cb;
  if (a.mentions.size() != b.mentions.size()) return a.mentions.size() > b.mentions.size();
  return a.first().before(b.first());
}

std::optional<CorefChain> select_central_chain(std::span<const CorefChain> chains) {
  if (chains.empty()) return std::nullopt;
  const CorefChain* best = &chains[0];
  for (const auto& c : chains.subspan(1)) {
    if (better_chain(c, *best)) best = &c;
  }
  return *best;
}

namespace {

// First mention per sentence, or null.
std::array<const Mention*, kStoryLength> first_per_sentence(const CorefChain& chain) {
  std::array<const Mention*, kStoryLength> out{};
  for (const auto& m : chain.mentions) {
    if (m.sentence >= kStoryLength) continue;
    const Mention*& slot = out[m.sentence];
    if (!slot || m.before(*slot)) slot = &m;
  }
  return out;
}

}  // namespace

EntitySkeleton to_surface(const CorefChain& chain) {
  SurfaceSlots slots;
  const auto firsts = first_per_sentence(chain);
  for (std::size_t s = 0; s < kStoryLength; ++s)
    if (firsts[s]) slots[s] = firsts[s]->text;
  return {slots};
}

SurfaceSlots surface_heads(const CorefChain& chain) {
  SurfaceSlots slots;
  const auto firsts = first_per_sentence(chain);
  for (std::size_t s = 0; s < kStoryLength; ++s)
    if (firsts[s]) slots[s] = firsts[s]->head;
  return slots;
}

EntitySkeleton to_nominalized(const CorefChain& chain) {
  NominalSlots slots{};
  const auto firsts = first_per_sentence(chain);
  for (std::size_t s = 0; s < kStoryLength; ++s)
    if (firsts[s]) slots[s] = {1, static_cast<std::uint8_t>(firsts[s]->is_pronoun ? 1 : 0)};
  return {slots};
}

EntitySkeleton to_abstract(const CorefChain& chain, const Lexicons& lex) {
  auto noun_category = [&](const Mention& m) {
    const auto lem = text::lemma(m.head);
    return lex.known_noun(lem) ? lex.category_of(lem) : m.category;
  };
  const Mention& head = chain.first();
  const Category head_cat = head.is_pronoun ? pronoun_category(head.head) : noun_category(head);
  AbstractSlots slots;
  const auto firsts = first_per_sentence(chain);
  for (std::size_t s = 0; s < kStoryLength; ++s) {
    if (!firsts[s]) continue;
    slots[s] = firsts[s]->is_pronoun ? head_cat : noun_category(*firsts[s]);
  }
  return {slots};
}

EntitySkeleton render(const CorefChain& chain, Repr repr, const Lexicons& lex) {
  switch (repr) {
    case Repr::kSurface: return to_surface(chain);
    case Repr::kNominalized: return to_nominalized(chain);
    case Repr::kAbstract: return to_abstract(chain, lex);
  }
  return to_surface(chain);
}

EntitySkeleton empty_skeleton(Repr repr) {
  switch (repr) {
    case Repr::kSurface: return {SurfaceSlots{}};
    case Repr::kNominalized: return {NominalSlots{}};
    case Repr::kAbstract: return {AbstractSlots{}};
  }
  return {SurfaceSlots{}};
}

PresenceVector presence_vector(const EntitySkeleton& sk) {
  PresenceVector v{};
  std::visit(
      [&](const auto& slots) {
        for (std::size_t s = 0; s < kStoryLength; ++s) {
          using T = std::decay_t<decltype(slots[s])>;
          if constexpr (std::is_same_v<T, NominalSlot>) {
            v[s] = slots[s].h;
          } else {
            v[s] = slots[s].has_value() ? 1 : 0;
          }
        }
      },
      sk.slots);
  return v;
}

void normalize_chain(CorefChain& chain, std::span<const Sentence> sentences, const Lexicons& lex) {
  if (chain.mentions.empty()) throw ValidationError("coreference chain has no mentions");
  for (auto& m : chain.mentions) {
    if (m.sentence >= sentences.size()) {
      throw ValidationError("mention sentence index " + std::to_string(m.sentence) + " out of range");
    }
    const auto& toks = sentences[m.sentence];
    if (m.start >= m.end || m.end > toks.size()) {
      throw ValidationError("mention span [" + std::to_string(m.start) + ", " +
                            std::to_string(m.end) + ") invalid for sentence " +
                            std::to_string(m.sentence) + " of " + std::to_string(toks.size()) +
                            " tokens");
    }
    Sentence span(toks.begin() + static_cast<std::ptrdiff_t>(m.start),
                  toks.begin() + static_cast<std::ptrdiff_t>(m.end));
    if (m.text.empty()) m.text = text::join(span);
    const auto lower = text::lowercase(m.text);
    if (m.is_pronoun && !lex.is_pronoun(lower)) {
      throw ValidationError("mention '" + m.text + "' is flagged as a pronoun but is not in the pronoun lexicon");
    }
    if (!m.is_pronoun && span.size() == 1 && lex.is_pronoun(lower)) m.is_pronoun = true;
    if (m.head.empty()) {
      if (m.is_pronoun) {
        m.head = lower;
      } else {
        m.head = text::lowercase(span.back());
        for (const auto& t : span) {
          if (lex.known_noun(text::lemma(t))) {
            m.head = text::lowercase(t);
            break;
          }
        }
      }
    }
    if (m.is_pronoun) {
      m.category = pronoun_category(m.head);
      m.nouns = 0;
    } else if (lex.known_noun(text::lemma(m.head))) {
      m.category = lex.category_of(text::lemma(m.head));
    }
  }
  std::sort(chain.mentions.begin(), chain.mentions.end(),
            [](const Mention& a, const Mention& b) { return a.before(b); });
  for (std::size_t i = 1; i < chain.mentions.size(); ++i) {
    const auto& a = chain.mentions[i - 1];
    const auto& b = chain.mentions[i];
    if (a.sentence == b.sentence && b.start < a.end) {
      throw ValidationError("overlapping mentions '" + a.text + "' and '" + b.text + "'");
    }
  }
}

}  // namespace skelgen::skeleton
