// SPDX-License-Identifier: Apache-2.0
#include "skelgen/skeleton/lexicon.hpp"

#include <fstream>
#include <sstream>

#include "lexicon_data.hpp"  // generated from data/lexicons at configure time
#include "skelgen/error.hpp"
#include "skelgen/text.hpp"

namespace skelgen::skeleton {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kPerson: return "person";
    case Category::kLocation: return "location";
    case Category::kObject: return "object";
    case Category::kOther: return "other";
  }
  return "other";
}

std::optional<Category> parse_category(std::string_view s) {
  if (s == "person") return Category::kPerson;
  if (s == "location") return Category::kLocation;
  if (s == "object") return Category::kObject;
  if (s == "other") return Category::kOther;
  return std::nullopt;
}

std::string_view to_string(Repr r) {
  switch (r) {
    case Repr::kSurface: return "surface";
    case Repr::kNominalized: return "nominalized";
    case Repr::kAbstract: return "abstract";
  }
  return "surface";
}

std::optional<Repr> parse_repr(std::string_view s) {
  if (s == "surface") return Repr::kSurface;
  if (s == "nominalized" || s == "nominal") return Repr::kNominalized;
  if (s == "abstract") return Repr::kAbstract;
  return std::nullopt;
}

PronounClass pronoun_class(std::string_view w) {
  for (auto f : {"i", "me", "my", "mine", "myself"})
    if (w == f) return PronounClass::kFirstSingular;
  for (auto f : {"we", "us", "our", "ours", "ourselves"})
    if (w == f) return PronounClass::kFirstPlural;
  for (auto f : {"you", "your", "yours", "yourself", "yourselves"})
    if (w == f) return PronounClass::kSecond;
  for (auto f : {"it", "its", "itself"})
    if (w == f) return PronounClass::kNeuter;
  return PronounClass::kPersonal;
}

Category pronoun_category(std::string_view w) {
  return pronoun_class(w) == PronounClass::kNeuter ? Category::kOther : Category::kPerson;
}

namespace {

template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t lineno = 0;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    fn(line, lineno);
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw IoError("cannot read lexicon file: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::set<std::string> parse_word_list(std::string_view content) {
  std::set<std::string> out;
  for_each_line(content, [&](const std::string& line, std::size_t) {
    out.insert(text::lowercase(trim(line)));
  });
  return out;
}

std::map<std::string, Category> parse_category_table(std::string_view content) {
  std::map<std::string, Category> out;
  for_each_line(content, [&](const std::string& line, std::size_t lineno) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("category lexicon line " + std::to_string(lineno) +
                            ": expected lemma<TAB>category");
    }
    const auto cat = parse_category(trim(line.substr(tab + 1)));
    if (!cat) {
      throw ValidationError("category lexicon line " + std::to_string(lineno) +
                            ": unknown category '" + trim(line.substr(tab + 1)) + "'");
    }
    out[text::lowercase(trim(line.substr(0, tab)))] = *cat;
  });
  return out;
}

Lexicons Lexicons::builtin() {
  Lexicons lex;
  lex.pronouns = parse_word_list(lexicon_data::kPronouns);
  lex.categories = parse_category_table(lexicon_data::kCategories);
  lex.stop_nouns = parse_word_list(lexicon_data::kStopNouns);
  return lex;
}

Lexicons Lexicons::load_dir(const std::filesystem::path& dir) {
  Lexicons lex;
  lex.pronouns = parse_word_list(read_file(dir / "pronouns.txt"));
  lex.categories = parse_category_table(read_file(dir / "categories.tsv"));
  if (std::filesystem::exists(dir / "stop_nouns.txt")) {
    lex.stop_nouns = parse_word_list(read_file(dir / "stop_nouns.txt"));
  }
  lex.validate();
  return lex;
}

bool Lexicons::is_pronoun(std::string_view lower) const {
  return pronouns.find(std::string(lower)) != pronouns.end();
}

bool Lexicons::is_stop_noun(std::string_view lemma) const {
  return stop_nouns.find(std::string(lemma)) != stop_nouns.end();
}

Category Lexicons::category_of(std::string_view lemma) const {
  auto it = categories.find(std::string(lemma));
  return it == categories.end() ? Category::kOther : it->second;
}

bool Lexicons::known_noun(std::string_view lemma) const {
  return categories.find(std::string(lemma)) != categories.end();
}

void Lexicons::validate() const {
  if (pronouns.empty()) throw ValidationError("pronoun lexicon is empty");
}

}  // namespace skelgen::skeleton
