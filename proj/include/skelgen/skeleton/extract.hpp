// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skelgen/skeleton/lexicon.hpp"
#include "skelgen/skeleton/types.hpp"

namespace skelgen::skeleton {

using Sentence = std::vector<std::string>;  // case-preserving tokens

// Mention detection over a story, in (sentence, start) order.
//
// Pronoun mentions are tokens found in the pronoun lexicon. Noun mentions
// come from two rules:
//  - after a determiner or possessive pronoun, the run of following content
//    words (up to four) yields its first lexicon noun, or else its last word;
//  - a lexicon noun standing alone is a mention by itself.
// "X and Y" after a noun joins both conjuncts into one mention whose text is
// the whole phrase including its determiner; other noun mentions are just
// the head word. Stop nouns are never mentions.
std::vector<Mention> detect_mentions(std::span<const Sentence> sentences, const Lexicons& lex);

// Rule-based coreference. Noun mentions with the same head lemma share a
// chain. Personal pronouns join the person chain mentioned most recently,
// neuter pronouns the most recent object/other chain, and first-person forms
// chain only with each other; a pronoun with no antecedent is dropped.
// Chains are kept when they have two or more mentions across at least two
// sentences, and are returned in order of first mention. Anything other than
// five sentences yields an empty list.
std::vector<CorefChain> extract_chains(std::span<const Sentence> sentences, const Lexicons& lex);

// Strict "a is a better skeleton than b": more covered sentences, then more
// mentions, then the earlier first mention.
bool better_chain(const CorefChain& a, const CorefChain& b);
std::optional<CorefChain> select_central_chain(std::span<const CorefChain> chains);

EntitySkeleton to_surface(const CorefChain& chain);
EntitySkeleton to_nominalized(const CorefChain& chain);
EntitySkeleton to_abstract(const CorefChain& chain, const Lexicons& lex);
EntitySkeleton render(const CorefChain& chain, Repr repr, const Lexicons& lex);
// Skeleton of a story with no central chain: every slot None / [0,0].
EntitySkeleton empty_skeleton(Repr repr);

PresenceVector presence_vector(const EntitySkeleton& skeleton);

// Lowercase head token per sentence (first mention wins), for the model's
// skeleton vocabulary.
SurfaceSlots surface_heads(const CorefChain& chain);

// Checks the CorefChain invariants against the story text; fills in text and
// head when empty. Throws ValidationError.
void normalize_chain(CorefChain& chain, std::span<const Sentence> sentences, const Lexicons& lex);

}  // namespace skelgen::skeleton
