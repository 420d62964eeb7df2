// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "skelgen/skeleton/types.hpp"

namespace skelgen::skeleton {

// How a pronoun form may corefer. First-person forms only chain with each
// other; third-person personal forms attach to person chains; neuter forms to
// object/other chains.
enum class PronounClass { kFirstSingular, kFirstPlural, kSecond, kPersonal, kNeuter };

PronounClass pronoun_class(std::string_view lower);
Category pronoun_category(std::string_view lower);

struct Lexicons {
  std::set<std::string> pronouns;               // lowercase forms
  std::map<std::string, Category> categories;   // lemma -> category
  std::set<std::string> stop_nouns;             // never mentions

  // The lists shipped in data/lexicons/, compiled in.
  static Lexicons builtin();

  // Directory holding pronouns.txt, categories.tsv and (optional) stop_nouns.txt.
  static Lexicons load_dir(const std::filesystem::path& dir);

  bool is_pronoun(std::string_view lower) const;
  bool is_stop_noun(std::string_view lemma) const;
  // Category of a lemma; unknown lemmas are kOther.
  Category category_of(std::string_view lemma) const;
  bool known_noun(std::string_view lemma) const;

  void validate() const;
};

// Plain-text formats: one lowercase token per line, or "lemma<TAB>category".
// Blank lines and lines starting with '#' are skipped.
std::set<std::string> parse_word_list(std::string_view content);
std::map<std::string, Category> parse_category_table(std::string_view content);

}  // namespace skelgen::skeleton
