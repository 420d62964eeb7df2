// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace skelgen::text {

// Splits on whitespace after separating punctuation into its own tokens.
// Case is preserved; apostrophes stay inside words.
std::vector<std::string> tokenize(std::string_view s);

std::string lowercase(std::string_view s);
std::vector<std::string> lowercase(const std::vector<std::string>& tokens);

bool is_punct(std::string_view token);

// Crude noun lemma: lowercase, a few irregular plurals, then plural suffix
// stripping (-ies -> -y, -sses -> -ss, -s).
std::string lemma(std::string_view word);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

}  // namespace skelgen::text
