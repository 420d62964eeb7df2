// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "skelgen/cli/commands.hpp"
#include "skelgen/error.hpp"
#include "skelgen/models/model.hpp"
#include "skelgen/text.hpp"
#include "test_support.hpp"

using namespace skelgen;
using namespace skelgen::cli;
using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(test::read_text(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

// A run config over `corpus` with the given model and training settings.
std::string config_json(const fs::path& corpus, const std::string& variant, std::size_t dim,
                        std::size_t max_steps, double alpha = 0.5) {
  json j = {{"seed", 3},
            {"corpus", {{"train", corpus.string()}, {"feature_dim", dim}}},
            {"model",
             {{"variant", variant}, {"embed_dim", 32}, {"hidden_dim", 64}, {"image_dim", dim},
              {"attn_dim", 32}, {"skeleton_vocab_k", 20}, {"encoder_layers", 2}, {"alpha", alpha}}},
            {"train", {{"lr", 0.001}, {"batch_size", 2}, {"epochs", max_steps}, {"max_steps", max_steps}}},
            {"generate", {{"max_len", 20}}}};
  return j.dump(2);
}

fs::path write(const fs::path& p, const std::string& content) {
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

fs::path synth_corpus(const fs::path& dir, std::size_t stories, std::size_t dim,
                      const std::string& name = "planted.jsonl") {
  corpus::SynthOptions o;
  o.stories = stories;
  o.feature_dim = dim;
  std::ostringstream log;
  cmd_synth(o, dir, name, log);
  return dir / name;
}

}  // namespace

TEST_CASE("extract: wedding fixture in all representations") {
  auto dir = test::scratch_dir("cli_extract");
  std::ostringstream log;
  cmd_extract({test::fixtures_dir() / "table1.jsonl", std::nullopt, skeleton::Repr::kNominalized, dir, true},
              log);
  auto rows = read_jsonl(dir / "skeletons.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["skeleton"].dump() == "[[0,0],[1,0],[1,1],[1,1],[0,0]]");
  CHECK(rows[0]["presence"].dump() == "[0,1,1,1,0]");
  CHECK(rows[0]["chain"][0]["text"] == "The bride and groom");
  CHECK(test::read_text(dir / "skeletons.jsonl").find("[[0,0],[1,0],[1,1],[1,1],[0,0]]") !=
        std::string::npos);

  cmd_extract({test::fixtures_dir() / "table1.jsonl", std::nullopt, skeleton::Repr::kAbstract, dir, true}, log);
  CHECK(read_jsonl(dir / "skeletons.jsonl")[0]["skeleton"].dump() ==
        R"([null,"person","person","person",null])");
  cmd_extract({test::fixtures_dir() / "table1.jsonl", std::nullopt, skeleton::Repr::kSurface, dir, true}, log);
  CHECK(read_jsonl(dir / "skeletons.jsonl")[0]["skeleton"].dump() ==
        R"([null,"The bride and groom","They","their",null])");
  auto manifest = json::parse(test::read_text(dir / "manifest.json"));
  CHECK(manifest["command"] == "extract");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("extract via the binary: entity-free corpus exits 0 with empty skeletons") {
  auto dir = test::scratch_dir("cli_extract_bin");
  const auto corpus = (test::fixtures_dir() / "no_entities.jsonl").string();
  CHECK(test::run_skelgen("extract --corpus " + corpus + " --repr surface --out-dir " + dir.string(),
                          dir / "log.txt") == 0);
  auto rows = read_jsonl(dir / "skeletons.jsonl");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["skeleton"].dump() == "[null,null,null,null,null]");
  CHECK(test::run_skelgen("extract --corpus " + (dir / "absent.jsonl").string() + " --out-dir " +
                              dir.string(),
                          dir / "log.txt") == 2);
  CHECK(test::run_skelgen("extract --corpus " + corpus + " --repr fancy --out-dir " + dir.string(),
                          dir / "log.txt") == 1);
  CHECK(test::run_skelgen("frobnicate", dir / "log.txt") == 1);
}

TEST_CASE("run config parsing and validation") {
  auto dir = test::scratch_dir("cli_config");
  auto corpus = synth_corpus(dir, 2, 8);
  auto cfg = parse_run_config(config_json(corpus, "mtg", 8, 5, 0.4), dir);
  CHECK(cfg.seed == 3u);
  CHECK(cfg.model.seed == 3u);
  CHECK(cfg.train.seed == 3u);
  CHECK(cfg.model.alpha == 0.4);
  validate(cfg);
  CHECK(config_hash(cfg) == config_hash(parse_run_config(config_json(corpus, "mtg", 8, 5, 0.4), dir)));
  CHECK(config_hash(cfg) != config_hash(parse_run_config(config_json(corpus, "mtg", 8, 6, 0.4), dir)));

  CHECK_THROWS_AS(parse_run_config(R"({"seed": 1, "modle": {}})", dir), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"seed": "one"})", dir), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"variant": "gpt"}})", dir), ValidationError);
  CHECK_THROWS_AS(validate(parse_run_config(R"({"corpus": {"train": "planted.jsonl"}})", dir)),
                  ValidationError);  // no seed
  auto bad_alpha = parse_run_config(config_json(corpus, "mtg", 8, 5, 1.5), dir);
  CHECK_THROWS_AS(validate(bad_alpha), ValidationError);
  auto missing = parse_run_config(config_json(dir / "nope.jsonl", "baseline", 8, 5), dir);
  CHECK_THROWS_AS(validate(missing), ValidationError);

  // Every shipped preset parses.
  for (const auto& entry : fs::directory_iterator(test::configs_dir())) {
    CAPTURE(entry.path().string());
    auto c = load_run_config(entry.path());
    CHECK(c.seed);
    c.model.validate();
  }
  auto paper = load_run_config(test::configs_dir() / "paper-mtg-a05-nominal.json");
  CHECK(paper.model.hidden_dim == 1024);
  CHECK(paper.train.batch_size == 64);
  CHECK(paper.model.skeleton_repr == skeleton::Repr::kNominalized);
  CHECK(load_run_config(test::configs_dir() / "desk-glocal.json").train.batch_size == 8);
}

TEST_CASE("train via the binary: alpha outside [0, 1] is a validation error") {
  auto dir = test::scratch_dir("cli_alpha");
  auto corpus = synth_corpus(dir, 2, 8);
  auto cfg = write(dir / "cfg.json", config_json(corpus, "mtg", 8, 5, 1.5));
  CHECK(test::run_skelgen("train --config " + cfg.string() + " --out-dir " + (dir / "run").string(),
                          dir / "log.txt") == 1);
  CHECK(test::read_text(dir / "log.txt").find("alpha") != std::string::npos);
  CHECK(!fs::exists(dir / "run" / "train_log.jsonl"));
  CHECK(test::run_skelgen("train --config " + cfg.string() + " --alpha 0.3 --max-steps 2 --out-dir " +
                              (dir / "run").string(),
                          dir / "log.txt") == 0);
}

TEST_CASE("train is reproducible and writes checkpoints") {
  auto dir = test::scratch_dir("cli_train");
  auto corpus = synth_corpus(dir, 4, 8);
  auto cfg = parse_run_config(config_json(corpus, "mtg", 8, 3), dir);
  cfg.train.epochs = 3;
  cfg.train.max_steps = 0;
  std::ostringstream log1, log2;
  auto a = cmd_train(cfg, dir / "a", log1);
  auto b = cmd_train(cfg, dir / "b", log2);
  REQUIRE(a.size() == 3);
  CHECK(log1.str() == log2.str());
  CHECK(log1.str().find(" L2 ") != std::string::npos);
  for (const char* f : {"train_log.jsonl", "best.sklg", "checkpoints/epoch_001.sklg",
                        "checkpoints/epoch_003.sklg", "manifest.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(test::read_text(dir / "a" / f) == test::read_text(dir / "b" / f));
  }
  auto lines = read_jsonl(dir / "a" / "train_log.jsonl");
  CHECK(lines.size() == 3);
  CHECK(lines[0].contains("skeleton_loss"));
}

TEST_CASE("overfit, generate and evaluate through the binary") {
  auto dir = test::scratch_dir("cli_pipeline");
  auto corpus = synth_corpus(dir, 2, 16);
  auto cfg = write(dir / "cfg.json", config_json(corpus, "glocal", 16, 500));
  REQUIRE(test::run_skelgen("train --config " + cfg.string() + " --out-dir " + (dir / "run").string(),
                            dir / "train.txt") == 0);
  auto log = read_jsonl(dir / "run" / "train_log.jsonl");
  REQUIRE(!log.empty());
  CHECK(log.back()["steps"] == 500);
  CHECK(log.back()["loss"].get<double>() < 0.1);

  const std::string ckpt = (dir / "run" / "best.sklg").string();
  REQUIRE(test::run_skelgen("generate --checkpoint " + ckpt + " --corpus " + corpus.string() +
                                " --out-dir " + (dir / "gen").string(),
                            dir / "gen.txt") == 0);
  auto refs = corpus::load_corpus(corpus, {16, true}).stories;
  auto gen = read_jsonl(dir / "gen" / "generated.jsonl");
  REQUIRE(gen.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(gen[i]["id"] == refs[i].id);
    for (std::size_t t = 0; t < 5; ++t)
      CHECK(gen[i]["sentences"][t].get<std::string>() == text::join(refs[i].steps[t].sis));
    CHECK(fs::exists(dir / "gen" / "attention" / (refs[i].id + "_sentence.csv")));
    CHECK(fs::exists(dir / "gen" / "attention" / (refs[i].id + "_word.csv")));
  }
  CHECK(fs::exists(dir / "gen" / "attention" / "summary.csv"));

  // Greedy generation is byte-identical on rerun.
  REQUIRE(test::run_skelgen("generate --checkpoint " + ckpt + " --corpus " + corpus.string() +
                                " --out-dir " + (dir / "gen2").string(),
                            dir / "gen2.txt") == 0);
  CHECK(test::read_text(dir / "gen" / "generated.jsonl") ==
        test::read_text(dir / "gen2" / "generated.jsonl"));
  CHECK(test::read_text(dir / "gen" / "manifest.json") != "");

  // Self-evaluation: five-token sentences give 99.6 and zero distance.
  REQUIRE(test::run_skelgen("eval --generated " + (dir / "gen" / "generated.jsonl").string() +
                                " --references " + corpus.string() + " --out-dir " +
                                (dir / "eval").string(),
                            dir / "eval.txt") == 0);
  auto report = json::parse(test::read_text(dir / "eval" / "eval_report.json"));
  CHECK(report["meteor_lite"].get<double>() == doctest::Approx(99.6).epsilon(1e-9));
  CHECK(report["skeleton_distance"].get<double>() == 0.0);

  // A mismatched feature dimension names both values.
  auto wide = synth_corpus(dir, 2, 12, "wide.jsonl");
  CHECK(test::run_skelgen("generate --checkpoint " + ckpt + " --corpus " + wide.string() +
                              " --out-dir " + (dir / "bad").string(),
                          dir / "bad.txt") == 1);
  const auto msg = test::read_text(dir / "bad.txt");
  CHECK(msg.find("D=12") != std::string::npos);
  CHECK(msg.find("image_dim=16") != std::string::npos);
}

TEST_CASE("eval: disjoint outputs and missing ids") {
  auto dir = test::scratch_dir("cli_eval");
  auto corpus = synth_corpus(dir, 3, 4);
  auto refs = corpus::load_corpus(corpus, {4, true}).stories;
  std::string gen;
  for (std::size_t i = 0; i < 2; ++i) {
    json j = {{"id", refs[i].id}, {"sentences", {"zz qq", "zz qq", "zz qq", "zz qq", "zz qq"}}};
    gen += j.dump() + "\n";
  }
  write(dir / "partial.jsonl", gen);
  CHECK(test::run_skelgen("eval --generated " + (dir / "partial.jsonl").string() + " --references " +
                              corpus.string() + " --out-dir " + (dir / "e").string(),
                          dir / "log.txt") == 1);
  CHECK(test::read_text(dir / "log.txt").find(refs[2].id) != std::string::npos);

  json j = {{"id", refs[2].id}, {"sentences", {"zz qq", "zz qq", "zz qq", "zz qq", "zz qq"}}};
  write(dir / "all.jsonl", gen + j.dump() + "\n");
  std::ostringstream log;
  auto r = cmd_eval({dir / "all.jsonl", corpus, std::nullopt, dir / "e", false}, log);
  CHECK(r.meteor_lite == 0.0);
  CHECK(r.skeleton_distance == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("gradcheck: passes, lists every parameter once, and catches faults") {
  auto dir = test::scratch_dir("cli_gradcheck");
  auto corpus = synth_corpus(dir, 2, 8);
  json j = json::parse(config_json(corpus, "skeleton_informed", 8, 1));
  j["model"]["hidden_dim"] = 6;
  j["model"]["embed_dim"] = 5;
  j["model"]["attn_dim"] = 4;
  auto cfg_path = write(dir / "cfg.json", j.dump());
  auto cfg = load_run_config(cfg_path);
  std::ostringstream log;
  auto report = cmd_gradcheck(cfg, {8, 1e-3, ad::testing::Fault::kNone}, dir / "ok", log);
  CHECK(report.passed(1e-3));
  auto out = json::parse(test::read_text(dir / "ok" / "gradcheck.json"));
  std::set<std::string> names;
  for (const auto& e : out["entries"]) names.insert(e["name"].get<std::string>());
  CHECK(names.size() == out["entries"].size());
  ad::ParamStore expected;
  auto mc = cfg.model;
  mc.vocab_size = 20;
  mc.skeleton_classes = 3;
  models::init_params(mc, expected);
  CHECK(names.size() == expected.size());
  for (const auto& n : expected.names()) CHECK(names.count(n) == 1);

  CHECK(test::run_skelgen("gradcheck --config " + cfg_path.string() + " --max-entries 4 --out-dir " +
                              (dir / "bin").string(),
                          dir / "log.txt") == 0);
  CHECK(test::run_skelgen("gradcheck --config " + cfg_path.string() +
                              " --max-entries 4 --inject-fault tanh --out-dir " + (dir / "bad").string(),
                          dir / "bad.txt") == 2);
  const auto msg = test::read_text(dir / "bad.txt");
  CHECK(msg.find("FAIL") != std::string::npos);
  CHECK(msg.find("worst parameter: ") != std::string::npos);
  CHECK(ad::testing::fault() == ad::testing::Fault::kNone);
}

TEST_CASE("stats and synth") {
  auto dir = test::scratch_dir("cli_stats");
  auto corpus = synth_corpus(dir, 5, 4);
  std::ostringstream log;
  cmd_stats({corpus, std::nullopt, dir / "s", 1, true}, log);
  auto st = json::parse(test::read_text(dir / "s" / "stats.json"));
  CHECK(st["stories"] == 5);
  CHECK(st["images"] == 25);
  CHECK(st["stories_with_skeleton"] == 5);
  CHECK(st["mean_skeleton_coverage"] == 5.0);
  CHECK(st["feature_dim"] == 4);
  auto again = synth_corpus(dir / "again", 5, 4);
  CHECK(test::read_text(corpus) == test::read_text(again));
  CHECK(test::read_text(dir / "manifest.json") == test::read_text(dir / "again" / "manifest.json"));
}
