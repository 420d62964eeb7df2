// SPDX-License-Identifier: Apache-2.0
#include "skelgen/corpus/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "skelgen/error.hpp"
#include "skelgen/text.hpp"

namespace skelgen::corpus {

using nlohmann::json;

std::vector<Sentence> Story::sis() const {
  std::vector<Sentence> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.sis);
  return out;
}

std::string_view to_string(DiiPolicy p) {
  switch (p) {
    case DiiPolicy::kCopySis: return "copy_sis";
    case DiiPolicy::kPlaceholder: return "placeholder";
    case DiiPolicy::kProvided: return "provided";
  }
  return "copy_sis";
}

std::optional<DiiPolicy> parse_dii_policy(std::string_view s) {
  if (s == "copy_sis") return DiiPolicy::kCopySis;
  if (s == "placeholder") return DiiPolicy::kPlaceholder;
  if (s == "provided") return DiiPolicy::kProvided;
  return std::nullopt;
}

namespace {

std::string story_label(const json& j) {
  if (j.is_object() && j.contains("id") && j["id"].is_string()) {
    return "story '" + j["id"].get<std::string>() + "'";
  }
  return "story";
}

skeleton::CorefChain parse_chain(const json& j, const std::vector<Sentence>& sis,
                                 const skeleton::Lexicons& lex) {
  if (!j.is_array()) throw ValidationError("chain must be an array of mentions");
  skeleton::CorefChain chain;
  for (const auto& m : j) {
    skeleton::Mention mention;
    mention.sentence = m.at("sentence").get<std::size_t>();
    mention.start = m.at("start").get<std::size_t>();
    mention.end = m.at("end").get<std::size_t>();
    if (m.contains("text")) mention.text = m["text"].get<std::string>();
    if (m.contains("pronoun")) mention.is_pronoun = m["pronoun"].get<bool>();
    mention.nouns = mention.is_pronoun ? 0 : 1;
    chain.mentions.push_back(std::move(mention));
  }
  skeleton::normalize_chain(chain, sis, lex);
  return chain;
}

}  // namespace

Story parse_story(std::string_view line, std::size_t feature_dim, const skeleton::Lexicons& lex) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  const std::string who = story_label(j);
  try {
    Story story;
    story.id = j.at("id").get<std::string>();
    if (story.id.empty()) throw ValidationError("story id is empty");
    const auto& steps = j.at("steps");
    if (!steps.is_array() || steps.size() != kSteps) {
      throw ValidationError(who + " has " + std::to_string(steps.is_array() ? steps.size() : 0) +
                            " steps, expected " + std::to_string(kSteps));
    }
    for (std::size_t i = 0; i < kSteps; ++i) {
      const auto& sj = steps[i];
      StoryStep step;
      step.image_features = sj.at("image_features").get<std::vector<double>>();
      if (feature_dim && step.image_features.size() != feature_dim) {
        throw ValidationError(who + " step " + std::to_string(i) + ": image_features has " +
                              std::to_string(step.image_features.size()) +
                              " values, expected " + std::to_string(feature_dim));
      }
      step.sis = text::tokenize(sj.at("sis").get<std::string>());
      if (step.sis.empty()) {
        throw ValidationError(who + " step " + std::to_string(i) + ": empty SIS");
      }
      if (sj.contains("dii") && !sj["dii"].is_null()) {
        auto dii = text::tokenize(sj["dii"].get<std::string>());
        if (!dii.empty()) step.dii = std::move(dii);
      }
      story.steps.push_back(std::move(step));
    }
    if (j.contains("chains") && !j["chains"].is_null()) {
      std::vector<skeleton::CorefChain> chains;
      const auto sis = story.sis();
      for (const auto& c : j["chains"]) chains.push_back(parse_chain(c, sis, lex));
      story.gold_chains = std::move(chains);
    }
    return story;
  } catch (const json::exception& e) {
    throw ValidationError(who + ": " + e.what());
  }
}

LoadResult parse_corpus(std::string_view content, const LoadOptions& opts,
                        const skeleton::Lexicons& lex) {
  LoadResult result;
  std::set<std::string> ids;
  std::size_t dim = opts.feature_dim;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Story story;
    try {
      story = parse_story(line, dim, lex);
    } catch (const ValidationError& e) {
      const std::string msg = "line " + std::to_string(lineno) + ": " + e.what();
      if (opts.strict) throw ValidationError(msg);
      result.warnings.push_back(msg);
      continue;
    }
    if (!ids.insert(story.id).second) {
      throw ValidationError("line " + std::to_string(lineno) + ": duplicate story id '" +
                            story.id + "'");
    }
    if (!dim) dim = story.steps.front().image_features.size();
    result.stories.push_back(std::move(story));
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path, const LoadOptions& opts,
                       const skeleton::Lexicons& lex) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read corpus file: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_corpus(ss.str(), opts, lex);
}

std::string story_to_json(const Story& story) {
  json j;
  j["id"] = story.id;
  j["steps"] = json::array();
  for (const auto& s : story.steps) {
    json sj;
    sj["image_features"] = s.image_features;
    sj["dii"] = s.dii ? json(text::join(*s.dii)) : json(nullptr);
    sj["sis"] = text::join(s.sis);
    j["steps"].push_back(std::move(sj));
  }
  if (story.gold_chains) {
    j["chains"] = json::array();
    for (const auto& c : *story.gold_chains) {
      json cj = json::array();
      for (const auto& m : c.mentions) {
        cj.push_back({{"sentence", m.sentence}, {"start", m.start}, {"end", m.end},
                      {"text", m.text}, {"pronoun", m.is_pronoun}});
      }
      j["chains"].push_back(std::move(cj));
    }
  }
  return j.dump();
}

void save_corpus(const std::filesystem::path& path, const std::vector<Story>& stories) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write corpus file: " + path.string());
  for (const auto& s : stories) f << story_to_json(s) << '\n';
  if (!f) throw IoError("failed writing corpus file: " + path.string());
}

Story fill_missing_dii(Story story, DiiPolicy policy) {
  for (std::size_t i = 0; i < story.steps.size(); ++i) {
    auto& step = story.steps[i];
    if (step.dii) continue;
    switch (policy) {
      case DiiPolicy::kCopySis:
        step.dii = step.sis;
        break;
      case DiiPolicy::kPlaceholder:
        step.dii = Sentence{std::string(kPlaceholderToken)};
        break;
      case DiiPolicy::kProvided:
        throw ValidationError("story '" + story.id + "' step " + std::to_string(i) +
                              " has no DII and the fill policy is 'provided'");
    }
  }
  return story;
}

std::optional<skeleton::CorefChain> central_chain(const Story& story,
                                                  const skeleton::Lexicons& lex) {
  if (story.gold_chains) return skeleton::select_central_chain(*story.gold_chains);
  const auto chains = skeleton::extract_chains(story.sis(), lex);
  return skeleton::select_central_chain(chains);
}

CorpusStats corpus_stats(const std::vector<Story>& stories) {
  CorpusStats st;
  st.stories = stories.size();
  for (const auto& s : stories) {
    for (const auto& step : s.steps) {
      ++st.images;
      if (!step.dii) ++st.missing_dii;
      st.sis_tokens += step.sis.size();
    }
  }
  return st;
}

}  // namespace skelgen::corpus
