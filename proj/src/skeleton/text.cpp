// SPDX-License-Identifier: Apache-2.0
#include "skelgen/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace skelgen::text {

namespace {

bool punct_char(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '(': case ')': case '[': case ']': case '{': case '}':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (punct_char(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> lowercase(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lowercase(t));
  return out;
}

bool is_punct(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), punct_char);
}

std::string lemma(std::string_view word) {
  static const std::map<std::string, std::string, std::less<>> irregular = {
      {"people", "person"}, {"men", "man"},     {"women", "woman"}, {"children", "child"},
      {"kids", "kid"},      {"feet", "foot"},   {"teeth", "tooth"}, {"mice", "mouse"},
      {"geese", "goose"},   {"wives", "wife"},  {"leaves", "leaf"}, {"knives", "knife"},
  };
  std::string w = lowercase(word);
  if (auto it = irregular.find(w); it != irregular.end()) return it->second;
  auto ends = [&](std::string_view suf) {
    return w.size() > suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (w.size() > 4 && ends("ies")) return w.substr(0, w.size() - 3) + "y";
  if (ends("sses")) return w.substr(0, w.size() - 2);
  if (w.size() > 3 && ends("s") && !ends("ss") && !ends("us") && !ends("is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace skelgen::text
