// SPDX-License-Identifier: Apache-2.0
#include "skelgen/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "skelgen/error.hpp"
#include "skelgen/text.hpp"

namespace skelgen::eval {

namespace {

// One matching stage over still-unmatched tokens. A candidate that extends
// the previous hypothesis token's match is preferred, otherwise the
// leftmost one.
void match_stage(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                 std::vector<std::ptrdiff_t>& hyp_to_ref, std::vector<bool>& ref_used) {
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp_to_ref[i] >= 0) continue;
    std::ptrdiff_t pick = -1;
    if (i > 0 && hyp_to_ref[i - 1] >= 0) {
      const auto next = static_cast<std::size_t>(hyp_to_ref[i - 1] + 1);
      if (next < ref.size() && !ref_used[next] && ref[next] == hyp[i]) pick = static_cast<std::ptrdiff_t>(next);
    }
    for (std::size_t j = 0; pick < 0 && j < ref.size(); ++j) {
      if (!ref_used[j] && ref[j] == hyp[i]) pick = static_cast<std::ptrdiff_t>(j);
    }
    if (pick >= 0) {
      hyp_to_ref[i] = pick;
      ref_used[static_cast<std::size_t>(pick)] = true;
    }
  }
}

std::vector<std::string> stems(const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& w : words) out.push_back(stem(w));
  return out;
}

std::string chain_key(const skeleton::CorefChain& chain) {
  for (const auto& m : chain.mentions) {
    if (!m.is_pronoun) return text::lemma(m.head);
  }
  return "#" + text::lowercase(chain.first().head);
}

double mean(double total, std::size_t n) { return n ? total / static_cast<double>(n) : 0.0; }

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Rounds `v` to millionths so that the rounded values add up to the rounded
// total (largest remainder). Each value moves by less than 1e-6.
std::vector<long long> micro_units(const std::vector<double>& v) {
  std::vector<long long> out(v.size());
  std::vector<std::pair<double, std::size_t>> rest(v.size());
  double total = 0.0;
  long long floors = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double scaled = v[i] * 1e6;
    out[i] = static_cast<long long>(std::floor(scaled));
    rest[i] = {scaled - static_cast<double>(out[i]), i};
    floors += out[i];
    total += v[i];
  }
  long long missing = std::llround(total * 1e6) - floors;
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; missing > 0 && j < rest.size(); ++j, --missing) ++out[rest[j].second];
  return out;
}

std::string micro_str(long long u) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", u < 0 ? "-" : "", std::llabs(u) / 1000000,
                std::llabs(u) % 1000000);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string stem(std::string_view word) {
  std::string w = text::lowercase(word);
  auto strip = [&](std::string_view suf, std::string_view repl = "") {
    if (w.size() >= suf.size() + 3 && w.compare(w.size() - suf.size(), suf.size(), suf) == 0) {
      w = w.substr(0, w.size() - suf.size()) + std::string(repl);
      return true;
    }
    return false;
  };
  strip("ies", "y") || strip("ing") || strip("ed") || strip("es") || strip("ly") ||
      (!w.ends_with("ss") && strip("s"));
  return w;
}

MeteorDetail meteor_lite_detail(std::span<const std::string> hypothesis,
                                std::span<const std::string> reference) {
  if (reference.empty()) throw ValidationError("meteor_lite: empty reference");
  const std::vector<std::string> hyp = text::lowercase({hypothesis.begin(), hypothesis.end()});
  const std::vector<std::string> ref = text::lowercase({reference.begin(), reference.end()});
  std::vector<std::ptrdiff_t> hyp_to_ref(hyp.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  match_stage(hyp, ref, hyp_to_ref, ref_used);
  match_stage(stems(hyp), stems(ref), hyp_to_ref, ref_used);

  MeteorDetail d;
  std::ptrdiff_t prev_ref = -2;
  bool prev_matched = false;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    const auto j = hyp_to_ref[i];
    if (j < 0) {
      prev_matched = false;
      continue;
    }
    ++d.matches;
    if (!prev_matched || j != prev_ref + 1) ++d.chunks;
    prev_ref = j;
    prev_matched = true;
  }
  if (d.matches == 0) return d;
  const double m = static_cast<double>(d.matches);
  d.precision = m / static_cast<double>(hyp.size());
  d.recall = m / static_cast<double>(ref.size());
  d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
  d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
  d.score = d.fmean * (1.0 - d.penalty);
  return d;
}

double meteor_lite(std::span<const std::string> hypothesis, std::span<const std::string> reference) {
  return meteor_lite_detail(hypothesis, reference).score;
}

double presence_distance(const skeleton::PresenceVector& a, const skeleton::PresenceVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

skeleton::PresenceVector story_presence(const StoryText& story, const skeleton::Lexicons& lex) {
  const auto chains = skeleton::extract_chains(story, lex);
  const auto central = skeleton::select_central_chain(chains);
  if (!central) return {};
  return skeleton::presence_vector(skeleton::to_nominalized(*central));
}

double skeleton_distance(const StoryText& gold, const StoryText& generated,
                         const skeleton::Lexicons& lex) {
  return presence_distance(story_presence(gold, lex), story_presence(generated, lex));
}

std::size_t distinct_entities(const StoryText& story, const skeleton::Lexicons& lex) {
  std::set<std::string> keys;
  for (const auto& c : skeleton::extract_chains(story, lex)) keys.insert(chain_key(c));
  return keys.size();
}

double avg_distinct_entities(std::span<const StoryText> stories, const skeleton::Lexicons& lex) {
  double total = 0.0;
  for (const auto& s : stories) total += static_cast<double>(distinct_entities(s, lex));
  return mean(total, stories.size());
}

TokenCounts count_nouns_pronouns(const StoryText& story, const skeleton::Lexicons& lex) {
  TokenCounts c;
  for (const auto& sent : story) {
    c.tokens += sent.size();
    for (const auto& tok : sent) c.pronouns += lex.is_pronoun(text::lowercase(tok));
  }
  for (const auto& m : skeleton::detect_mentions(story, lex)) c.nouns += m.nouns;
  return c;
}

NounPronounStats noun_pronoun_stats(std::span<const StoryText> stories,
                                    const skeleton::Lexicons& lex) {
  TokenCounts total;
  for (const auto& s : stories) {
    const auto c = count_nouns_pronouns(s, lex);
    total.tokens += c.tokens;
    total.nouns += c.nouns;
    total.pronouns += c.pronouns;
  }
  if (total.tokens == 0) return {};
  const double n = static_cast<double>(total.tokens);
  return {100.0 * static_cast<double>(total.nouns) / n,
          100.0 * static_cast<double>(total.pronouns) / n};
}

std::vector<ScoredPair> align_by_id(std::span<const NamedStory> references,
                                    std::span<const NamedStory> generated) {
  std::map<std::string, const NamedStory*> by_id;
  for (const auto& g : generated) {
    if (!by_id.emplace(g.id, &g).second) throw ValidationError("duplicate generated story id " + g.id);
  }
  std::vector<ScoredPair> out;
  std::vector<std::string> missing;
  std::set<std::string> seen;
  for (const auto& r : references) {
    seen.insert(r.id);
    auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      missing.push_back(r.id);
      continue;
    }
    out.push_back({r.id, r.sentences, it->second->sentences});
  }
  std::vector<std::string> extra;
  for (const auto& g : generated)
    if (!seen.count(g.id)) extra.push_back(g.id);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "story ids do not match";
    if (!missing.empty()) msg += "; missing from generated: " + text::join(missing, ", ");
    if (!extra.empty()) msg += "; not in references: " + text::join(extra, ", ");
    throw ValidationError(msg);
  }
  return out;
}

EvalReport evaluate(std::span<const ScoredPair> pairs, const skeleton::Lexicons& lex) {
  EvalReport r;
  r.stories = pairs.size();
  r.per_story.resize(pairs.size());
  std::vector<double> sentence_sum(pairs.size(), 0.0);
  std::vector<std::size_t> sentence_count(pairs.size(), 0);
  std::string error;
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& p = pairs[static_cast<std::size_t>(i)];
    auto& s = r.per_story[static_cast<std::size_t>(i)];
    try {
      if (p.reference.size() != p.generated.size()) {
        throw ValidationError("story " + p.id + ": " + std::to_string(p.generated.size()) +
                              " generated sentences for " + std::to_string(p.reference.size()) +
                              " reference sentences");
      }
      s.id = p.id;
      for (std::size_t t = 0; t < p.reference.size(); ++t) {
        sentence_sum[static_cast<std::size_t>(i)] += meteor_lite(p.generated[t], p.reference[t]);
        ++sentence_count[static_cast<std::size_t>(i)];
      }
      s.meteor = mean(sentence_sum[static_cast<std::size_t>(i)], sentence_count[static_cast<std::size_t>(i)]);
      s.distance = skeleton_distance(p.reference, p.generated, lex);
      s.entities = distinct_entities(p.generated, lex);
      s.reference_entities = distinct_entities(p.reference, lex);
    } catch (const std::exception& e) {
#pragma omp critical
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw ValidationError(error);

  double meteor = 0.0, distance = 0.0, ents = 0.0, ref_ents = 0.0;
  std::size_t sentences = 0;
  std::vector<StoryText> gen, ref;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    meteor += sentence_sum[i];
    sentences += sentence_count[i];
    distance += r.per_story[i].distance;
    ents += static_cast<double>(r.per_story[i].entities);
    ref_ents += static_cast<double>(r.per_story[i].reference_entities);
    gen.push_back(pairs[i].generated);
    ref.push_back(pairs[i].reference);
  }
  r.meteor_lite = 100.0 * mean(meteor, sentences);
  r.skeleton_distance = mean(distance, pairs.size());
  r.avg_distinct_entities = mean(ents, pairs.size());
  r.reference_avg_distinct_entities = mean(ref_ents, pairs.size());
  r.generated = noun_pronoun_stats(gen, lex);
  r.reference = noun_pronoun_stats(ref, lex);
  return r;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["stories"] = r.stories;
  j["meteor_lite"] = r.meteor_lite;
  j["skeleton_distance"] = r.skeleton_distance;
  j["avg_distinct_entities"] = r.avg_distinct_entities;
  j["reference_avg_distinct_entities"] = r.reference_avg_distinct_entities;
  j["noun_pct"] = r.generated.noun_pct;
  j["pronoun_pct"] = r.generated.pronoun_pct;
  j["reference_noun_pct"] = r.reference.noun_pct;
  j["reference_pronoun_pct"] = r.reference.pronoun_pct;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& s : r.per_story) {
    rows.push_back({{"id", s.id},
                    {"meteor_lite", 100.0 * s.meteor},
                    {"skeleton_distance", s.distance},
                    {"distinct_entities", s.entities},
                    {"reference_distinct_entities", s.reference_entities}});
  }
  j["per_story"] = rows;
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "stories                  %zu\n"
                "METEOR-lite              %.2f\n"
                "skeleton distance        %.4f\n"
                "avg distinct entities    %.4f (reference %.4f)\n"
                "noun %%                   %.2f (reference %.2f)\n"
                "pronoun %%                %.2f (reference %.2f)\n",
                r.stories, r.meteor_lite, r.skeleton_distance, r.avg_distinct_entities,
                r.reference_avg_distinct_entities, r.generated.noun_pct, r.reference.noun_pct,
                r.generated.pronoun_pct, r.reference.pronoun_pct);
  return buf;
}

void export_attention(const models::AttentionMaps& maps, std::span<const std::string> slot_labels,
                      const std::vector<Sentence>& words, const std::filesystem::path& dir,
                      const std::string& stem_name) {
  if (slot_labels.size() != models::kSlots) {
    throw ValidationError("export_attention: expected 5 slot labels, got " +
                          std::to_string(slot_labels.size()));
  }
  if (maps.a_s.size() != maps.rows * models::kSlots ||
      maps.a_w.size() != maps.rows * maps.words * models::kSlots || maps.lengths.size() != maps.rows) {
    throw ValidationError("export_attention: inconsistent attention maps");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::string header;
  for (const auto& l : slot_labels) header += "," + l;

  auto s_out = open_out(dir / (stem_name + "_sentence.csv"));
  s_out << "sentence" << header << "\n";
  for (std::size_t r = 0; r < maps.rows; ++r) {
    std::vector<double> row(models::kSlots);
    for (std::size_t k = 0; k < models::kSlots; ++k) row[k] = maps.slot(r, k);
    s_out << r;
    for (long long u : micro_units(row)) s_out << "," << micro_str(u);
    s_out << "\n";
  }
  auto w_out = open_out(dir / (stem_name + "_word.csv"));
  w_out << "sentence,word_index,word" << header << "\n";
  for (std::size_t r = 0; r < maps.rows; ++r) {
    // Rounded per slot over the word axis, the axis A_w is normalized along.
    std::vector<std::vector<long long>> cols(models::kSlots);
    for (std::size_t k = 0; k < models::kSlots; ++k) {
      std::vector<double> col(maps.lengths[r]);
      for (std::size_t w = 0; w < maps.lengths[r]; ++w) col[w] = maps.word(r, w, k);
      cols[k] = micro_units(col);
    }
    for (std::size_t w = 0; w < maps.lengths[r]; ++w) {
      const bool named = r < words.size() && w < words[r].size();
      w_out << r << "," << w << "," << (named ? words[r][w] : "");
      for (std::size_t k = 0; k < models::kSlots; ++k) w_out << "," << micro_str(cols[k][w]);
      w_out << "\n";
    }
  }
  if (!s_out || !w_out) throw IoError("failed writing attention CSVs under " + dir.string());
}

AttentionSummary summarize_attention(std::span<const models::AttentionMaps> maps,
                                     std::span<const std::vector<std::string>> slot_labels,
                                     std::size_t top) {
  if (maps.size() != slot_labels.size()) {
    throw ValidationError("summarize_attention: one label row per story is required");
  }
  std::map<std::string, std::size_t> freq;
  for (const auto& labels : slot_labels)
    for (const auto& l : labels) ++freq[l];
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top) ranked.resize(top);

  AttentionSummary s;
  std::map<std::string, std::size_t> column;
  for (const auto& [label, count] : ranked) {
    column[label] = s.labels.size();
    s.labels.push_back(label);
  }
  s.mass.assign(models::kSlots, std::vector<double>(s.labels.size(), 0.0));
  std::vector<std::vector<double>> seen = s.mass;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t t = 0; t < models::kSlots && t < maps[i].rows; ++t) {
      for (std::size_t k = 0; k < models::kSlots && k < slot_labels[i].size(); ++k) {
        auto it = column.find(slot_labels[i][k]);
        if (it == column.end()) continue;
        s.mass[t][it->second] += maps[i].slot(t, k);
        seen[t][it->second] += 1.0;
      }
    }
  }
  for (std::size_t t = 0; t < models::kSlots; ++t)
    for (std::size_t c = 0; c < s.labels.size(); ++c)
      if (seen[t][c] > 0) s.mass[t][c] /= seen[t][c];
  return s;
}

void export_attention_summary(const AttentionSummary& s, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "sentence";
  for (const auto& l : s.labels) out << "," << l;
  out << "\n";
  for (std::size_t t = 0; t < s.mass.size(); ++t) {
    out << t;
    for (double v : s.mass[t]) out << "," << fixed6(v);
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace skelgen::eval
