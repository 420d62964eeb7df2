// SPDX-License-Identifier: Apache-2.0
#include <omp.h>

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "skelgen/corpus/corpus.hpp"
#include "skelgen/error.hpp"
#include "skelgen/eval/metrics.hpp"
#include "skelgen/text.hpp"
#include "test_support.hpp"

using namespace skelgen;
using namespace skelgen::eval;

namespace {

Sentence toks(std::string_view s) { return text::tokenize(s); }

StoryText story_of(std::initializer_list<const char*> lines) {
  StoryText s;
  for (auto l : lines) s.push_back(toks(l));
  return s;
}

const skeleton::Lexicons& lex() {
  static const auto l = skeleton::Lexicons::builtin();
  return l;
}

StoryText table1() {
  auto r = corpus::load_corpus(test::fixtures_dir() / "table1.jsonl", {4, true});
  return r.stories.at(0).sis();
}

// Direct evaluation of the scoring formula.
double formula(double m, double hyp, double ref, double chunks) {
  if (m == 0) return 0.0;
  const double p = m / hyp, r = m / ref;
  const double f = 10 * p * r / (r + 9 * p);
  return f * (1 - 0.5 * std::pow(chunks / m, 3));
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("meteor_lite worked examples") {
  const auto five = toks("one two three four five");
  auto d = meteor_lite_detail(five, five);
  CHECK(d.matches == 5);
  CHECK(d.chunks == 1);
  CHECK(std::abs(d.score - 0.996) < 1e-9);
  CHECK(std::abs(d.score - formula(5, 5, 5, 1)) < 1e-12);

  CHECK(meteor_lite(toks("red green"), toks("blue yellow")) == 0.0);
  CHECK(meteor_lite({}, toks("blue")) == 0.0);

  auto cat = meteor_lite_detail(toks("the cat sat"), toks("the dog sat"));
  CHECK(cat.matches == 2);
  CHECK(cat.chunks == 2);
  CHECK(std::abs(cat.precision - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(cat.fmean - 2.0 / 3.0) < 1e-12);
  CHECK(cat.penalty == 0.5);
  CHECK(std::abs(cat.score - 1.0 / 3.0) < 1e-9);

  CHECK_THROWS_AS(meteor_lite(five, {}), ValidationError);
}

TEST_CASE("meteor_lite stem stage and case folding") {
  CHECK(stem("dogs") == "dog");
  CHECK(stem("jumped") == "jump");
  CHECK(stem("playing") == "play");
  CHECK(stem("glass") == "glass");
  auto d = meteor_lite_detail(toks("The dogs jumped"), toks("the dog jumps"));
  CHECK(d.matches == 3);
  CHECK(d.chunks == 1);
  // Reordering costs chunks.
  auto r = meteor_lite_detail(toks("sat the cat"), toks("the cat sat"));
  CHECK(r.matches == 3);
  CHECK(r.chunks == 2);
  CHECK(std::abs(r.score - formula(3, 3, 3, 2)) < 1e-12);
  // A repeated word continues the running chunk when it can.
  auto rep = meteor_lite_detail(toks("a b a c"), toks("a c a b a c"));
  CHECK(rep.matches == 4);
  CHECK(std::abs(rep.score - formula(4, 4, 6, rep.chunks)) < 1e-12);
}

TEST_CASE("meteor_lite properties over random sentences") {
  Rng rng(11);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g", "h"};
  auto draw = [&](std::size_t n) {
    Sentence s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(words[rng.below(words.size())]);
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const auto n = 1 + rng.below(8);
    auto x = draw(n), y = draw(n), z = draw(1 + rng.below(8));
    const double sxy = meteor_lite(x, y);
    CHECK(sxy >= 0.0);
    CHECK(sxy <= 1.0);
    if (x != y) CHECK(meteor_lite(x, x) >= sxy);
    auto d = meteor_lite_detail(z, y);
    CHECK(std::abs(d.score - formula(static_cast<double>(d.matches), static_cast<double>(z.size()),
                                     static_cast<double>(y.size()), static_cast<double>(d.chunks))) <
          1e-12);
    CHECK(d.chunks <= d.matches);
  }
}

TEST_CASE("presence distance is a metric") {
  CHECK(presence_distance({1, 1, 1, 0, 0}, {1, 0, 1, 0, 1}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  Rng rng(5);
  auto draw = [&] {
    skeleton::PresenceVector v;
    for (auto& b : v) b = static_cast<std::uint8_t>(rng.below(2));
    return v;
  };
  for (int i = 0; i < 10000; ++i) {
    auto a = draw(), b = draw(), c = draw();
    const double ab = presence_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK((ab == 0.0) == (a == b));
    CHECK(ab == presence_distance(b, a));
    CHECK(presence_distance(a, c) <= ab + presence_distance(b, c) + 1e-12);
  }
}

TEST_CASE("skeleton distance on stories") {
  const auto t1 = table1();
  CHECK(story_presence(t1, lex()) == skeleton::PresenceVector{0, 1, 1, 1, 0});
  CHECK(skeleton_distance(t1, t1, lex()) == 0.0);
  auto empty = story_of({"Wow.", "So fun!", "Amazing.", "Great.", "Done."});
  CHECK(story_presence(empty, lex()) == skeleton::PresenceVector{});
  CHECK(skeleton_distance(t1, empty, lex()) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("distinct entities") {
  CHECK(distinct_entities(table1(), lex()) == 2);
  auto empty = story_of({"Wow.", "So fun!", "Amazing.", "Great.", "Done."});
  CHECK(distinct_entities(empty, lex()) == 0);
  // Two chains with the same head lemma count once.
  auto dogs = story_of({"The dog ran.", "The dog sat.", "Wow.", "The dogs ran.", "Dogs slept."});
  CHECK(distinct_entities(dogs, lex()) == 1);
  const StoryText both[] = {table1(), empty};
  CHECK(avg_distinct_entities(both, lex()) == 1.0);
}

TEST_CASE("noun and pronoun counts") {
  auto c = count_nouns_pronouns(story_of({"they saw it", "quickly", "quickly", "quickly", "quickly"}), lex());
  CHECK(c.pronouns == 2);
  CHECK(c.tokens == 7);
  const StoryText pron[] = {story_of({"they saw it", "she", "he", "we", "you"})};
  CHECK(noun_pronoun_stats(pron, lex()).noun_pct == 0.0);
  auto bride = count_nouns_pronouns(table1(), lex());
  CHECK(bride.nouns >= 3);  // "bride and groom" counts two noun tokens
}

TEST_CASE("planted noun and pronoun rates are recovered") {
  // Each ten-token sentence holds exactly one pronoun and two bare nouns
  // among filler words that are neither.
  const std::vector<std::string> pronouns = {"he", "she", "they", "it", "them", "him"};
  const std::vector<std::string> nouns = {"dog", "cake", "park", "beach", "car", "boat"};
  const std::vector<std::string> filler = {"quickly", "ran", "very", "saw", "slowly", "jumped"};
  Rng rng(21);
  std::vector<StoryText> stories;
  for (int i = 0; i < 200; ++i) {
    StoryText s;
    for (int t = 0; t < 5; ++t) {
      Sentence sent;
      for (int j = 0; j < 10; ++j) sent.push_back(filler[rng.below(filler.size())]);
      std::vector<std::size_t> pos = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
      rng.shuffle(pos.begin(), pos.end());
      sent[pos[0]] = pronouns[rng.below(pronouns.size())];
      sent[pos[1]] = nouns[rng.below(nouns.size())];
      sent[pos[2]] = nouns[rng.below(nouns.size())];
      s.push_back(sent);
    }
    stories.push_back(s);
  }
  auto st = noun_pronoun_stats(stories, lex());
  CHECK(std::abs(st.pronoun_pct - 10.0) <= 0.5);
  CHECK(std::abs(st.noun_pct - 20.0) <= 0.5);
}

TEST_CASE("corpus evaluation") {
  std::vector<ScoredPair> same;
  for (int i = 0; i < 6; ++i) {
    auto s = story_of({"the dog ran very fast", "the dog sat down there", "it was a good day",
                       "my friends came over later", "the dog slept all night"});
    same.push_back({"s" + std::to_string(i), s, s});
  }
  auto r = evaluate(same, lex());
  CHECK(r.meteor_lite == doctest::Approx(99.6).epsilon(1e-12));
  CHECK(r.skeleton_distance == 0.0);
  CHECK(r.avg_distinct_entities == r.reference_avg_distinct_entities);
  CHECK(r.per_story.size() == 6);

  auto disjoint = same;
  for (auto& p : disjoint)
    for (auto& sent : p.generated) sent = toks("zzz qqq");
  CHECK(evaluate(disjoint, lex()).meteor_lite == 0.0);

  auto bad = same;
  bad[2].generated.pop_back();
  CHECK_THROWS_AS(evaluate(bad, lex()), ValidationError);

  // Thread count does not change the report.
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto serial = report_to_json(evaluate(disjoint, lex()));
  omp_set_num_threads(std::max(threads, 4));
  CHECK(report_to_json(evaluate(disjoint, lex())) == serial);
  omp_set_num_threads(threads);

  auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j["per_story"].size() == 6);
  CHECK(report_table(r).find("METEOR-lite") != std::string::npos);
}

TEST_CASE("alignment by id") {
  std::vector<NamedStory> refs = {{"a", {}}, {"b", {}}, {"c", {}}};
  std::vector<NamedStory> gen = {{"c", {}}, {"a", {}}};
  try {
    align_by_id(refs, gen);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  gen.push_back({"b", {}});
  auto pairs = align_by_id(refs, gen);
  CHECK(pairs[1].id == "b");
}

TEST_CASE("attention export") {
  models::AttentionMaps m;
  m.rows = 5;
  m.words = 3;
  m.lengths = {3, 2, 3, 1, 3};
  Rng rng(4);
  for (std::size_t i = 0; i < 5 * 3 * 5; ++i) m.a_w.push_back(rng.uniform());
  for (std::size_t i = 0; i < 5 * 5; ++i) m.a_s.push_back(rng.uniform());
  const std::vector<std::string> labels = {"dog", "dog", "<none>", "it", "dog"};
  auto dir = test::scratch_dir("eval");
  export_attention(m, labels, {}, dir, "story0");

  auto s = read_csv(dir / "story0_sentence.csv");
  REQUIRE(s.size() == 6);
  CHECK(s[0] == std::vector<std::string>{"sentence", "dog", "dog", "<none>", "it", "dog"});
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(std::stod(s[r + 1][k + 1]) - m.slot(r, k)) < 1e-6);

  auto w = read_csv(dir / "story0_word.csv");
  CHECK(w.size() == 1 + 3 + 2 + 3 + 1 + 3);
  CHECK(std::stoul(w[4][0]) == 1);
  CHECK(std::abs(std::stod(w[4][3]) - m.word(1, 0, 0)) < 1e-6);

  CHECK_THROWS_AS(export_attention(m, labels, {}, "/proc/forbidden/x", "s"), IoError);
  CHECK_THROWS_AS(export_attention(m, std::vector<std::string>{"a"}, {}, dir, "s"), ValidationError);

  const models::AttentionMaps maps[] = {m, m};
  const std::vector<std::string> rows[] = {labels, {"cake", "cake", "cake", "cake", "cake"}};
  auto sum = summarize_attention(maps, rows, 2);
  CHECK(sum.labels.size() == 2);
  CHECK(sum.labels[0] == "cake");
  CHECK(sum.mass[0][0] == doctest::Approx((m.slot(0, 0) + m.slot(0, 1) + m.slot(0, 2) + m.slot(0, 3) +
                                           m.slot(0, 4)) / 5));
  export_attention_summary(sum, dir / "summary.csv");
  CHECK(read_csv(dir / "summary.csv").size() == 6);
}

TEST_CASE("exported distributions keep their sums at six decimals") {
  Rng rng(8);
  models::AttentionMaps m;
  m.rows = 5;
  m.words = 7;
  m.lengths = {7, 7, 7, 7, 7};
  m.a_w.assign(5 * 7 * 5, 0.0);
  m.a_s.assign(5 * 5, 0.0);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t k = 0; k < 5; ++k) {
      double z = 0;
      for (std::size_t w = 0; w < 7; ++w) z += m.a_w[(r * 7 + w) * 5 + k] = rng.uniform() / 3.0;
      for (std::size_t w = 0; w < 7; ++w) m.a_w[(r * 7 + w) * 5 + k] /= z;
    }
    double z = 0;
    for (std::size_t k = 0; k < 5; ++k) z += m.a_s[r * 5 + k] = rng.uniform();
    for (std::size_t k = 0; k < 5; ++k) m.a_s[r * 5 + k] /= z;
  }
  auto dir = test::scratch_dir("eval_sums");
  export_attention(m, std::vector<std::string>(5, "x"), {}, dir, "s");
  auto s = read_csv(dir / "s_sentence.csv");
  for (std::size_t r = 1; r < s.size(); ++r) {
    double total = 0;
    for (std::size_t k = 1; k < s[r].size(); ++k) total += std::stod(s[r][k]);
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  auto w = read_csv(dir / "s_word.csv");
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t k = 0; k < 5; ++k) {
      double total = 0;
      for (std::size_t i = 1; i < w.size(); ++i) {
        if (std::stoul(w[i][0]) != r) continue;
        const double v = std::stod(w[i][3 + k]);
        CHECK(std::abs(v - m.word(r, std::stoul(w[i][1]), k)) < 1e-6);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}
