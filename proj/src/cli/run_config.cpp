// SPDX-License-Identifier: Apache-2.0
#include "skelgen/cli/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ValidationError("unknown config key " + where + "." + key);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key " + where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ValidationError(what + " does not exist: " + p.string());
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"seed", "corpus", "model", "train", "generate", "eval"});
  RunConfig c;
  if (j.contains("seed")) {
    std::uint64_t seed = 0;
    read(j, "seed", seed, "config");
    c.seed = seed;
  }

  if (j.contains("corpus")) {
    const auto& k = j.at("corpus");
    check_keys(k, "corpus", {"train", "eval", "lexicons", "feature_dim", "dii_policy",
                             "max_sentence_len", "min_count", "max_vocab", "strict"});
    std::string train, eval, lexicons, policy = "copy_sis";
    read(k, "train", train, "corpus");
    if (!train.empty()) c.corpus.train = resolve(base_dir, train);
    if (k.contains("eval") && !k.at("eval").is_null()) {
      read(k, "eval", eval, "corpus");
      c.corpus.eval = resolve(base_dir, eval);
    }
    if (k.contains("lexicons") && !k.at("lexicons").is_null()) {
      read(k, "lexicons", lexicons, "corpus");
      c.corpus.lexicons = resolve(base_dir, lexicons);
    }
    read(k, "feature_dim", c.corpus.feature_dim, "corpus");
    read(k, "dii_policy", policy, "corpus");
    const auto p = corpus::parse_dii_policy(policy);
    if (!p) throw ValidationError("corpus.dii_policy must be copy_sis, placeholder or provided");
    c.corpus.dii_policy = *p;
    read(k, "max_sentence_len", c.corpus.max_sentence_len, "corpus");
    read(k, "min_count", c.corpus.min_count, "corpus");
    read(k, "max_vocab", c.corpus.max_vocab, "corpus");
    read(k, "strict", c.corpus.strict, "corpus");
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model", {"variant", "embed_dim", "hidden_dim", "image_dim", "attn_dim",
                            "skeleton_vocab_k", "encoder_layers", "alpha", "skeleton_repr"});
    std::string variant = "baseline", repr = "surface";
    read(m, "variant", variant, "model");
    read(m, "skeleton_repr", repr, "model");
    const auto v = models::parse_variant(variant);
    if (!v) throw ValidationError("model.variant must be baseline, skeleton_informed, mtg or glocal");
    const auto r = skeleton::parse_repr(repr);
    if (!r) throw ValidationError("model.skeleton_repr must be surface, nominalized or abstract");
    c.model.variant = *v;
    c.model.skeleton_repr = *r;
    read(m, "embed_dim", c.model.embed_dim, "model");
    read(m, "hidden_dim", c.model.hidden_dim, "model");
    read(m, "image_dim", c.model.image_dim, "model");
    read(m, "attn_dim", c.model.attn_dim, "model");
    read(m, "skeleton_vocab_k", c.model.skeleton_vocab_k, "model");
    read(m, "encoder_layers", c.model.encoder_layers, "model");
    read(m, "alpha", c.model.alpha, "model");
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train", {"lr", "batch_size", "epochs", "max_steps"});
    read(t, "lr", c.train.lr, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "max_steps", c.train.max_steps, "train");
  }

  if (j.contains("generate")) {
    const auto& g = j.at("generate");
    check_keys(g, "generate", {"max_len", "sample", "temperature"});
    read(g, "max_len", c.generate.max_len, "generate");
    read(g, "sample", c.generate.sample, "generate");
    read(g, "temperature", c.generate.temperature, "generate");
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, "eval", {"attention_top"});
    read(e, "attention_top", c.attention_top, "eval");
  }
  if (c.seed) apply_seed(c, *c.seed);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.model.seed = seed;
  c.train.seed = seed;
  c.generate.seed = seed;
}

void validate(const RunConfig& c, bool need_train_corpus) {
  if (!c.seed) throw ValidationError("a seed is required: set \"seed\" in the config or pass --seed");
  c.model.validate();
  if (c.train.batch_size == 0) throw ValidationError("train.batch_size must be positive");
  if (!(c.train.lr > 0.0)) throw ValidationError("train.lr must be positive");
  if (c.generate.max_len == 0) throw ValidationError("generate.max_len must be positive");
  if (!(c.generate.temperature > 0.0)) throw ValidationError("generate.temperature must be positive");
  if (c.corpus.min_count == 0) throw ValidationError("corpus.min_count must be at least 1");
  if (need_train_corpus) {
    if (c.corpus.train.empty()) throw ValidationError("corpus.train is required");
    require_exists(c.corpus.train, "corpus.train");
  }
  if (c.corpus.eval) require_exists(*c.corpus.eval, "corpus.eval");
  if (c.corpus.lexicons) require_exists(*c.corpus.lexicons, "corpus.lexicons");
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["corpus"] = {
      {"train", c.corpus.train.string()},
      {"eval", c.corpus.eval ? json(c.corpus.eval->string()) : json(nullptr)},
      {"lexicons", c.corpus.lexicons ? json(c.corpus.lexicons->string()) : json(nullptr)},
      {"feature_dim", c.corpus.feature_dim},
      {"dii_policy", corpus::to_string(c.corpus.dii_policy)},
      {"max_sentence_len", c.corpus.max_sentence_len},
      {"min_count", c.corpus.min_count},
      {"max_vocab", c.corpus.max_vocab},
      {"strict", c.corpus.strict},
  };
  j["model"] = {
      {"variant", models::to_string(c.model.variant)},
      {"embed_dim", c.model.embed_dim},
      {"hidden_dim", c.model.hidden_dim},
      {"image_dim", c.model.image_dim},
      {"attn_dim", c.model.attn_dim},
      {"skeleton_vocab_k", c.model.skeleton_vocab_k},
      {"encoder_layers", c.model.encoder_layers},
      {"alpha", c.model.alpha},
      {"skeleton_repr", skeleton::to_string(c.model.skeleton_repr)},
  };
  j["train"] = {{"lr", c.train.lr},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},
                {"max_steps", c.train.max_steps}};
  j["generate"] = {{"max_len", c.generate.max_len},
                   {"sample", c.generate.sample},
                   {"temperature", c.generate.temperature}};
  j["eval"] = {{"attention_top", c.attention_top}};
  return j.dump(2);
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(run_config_to_json(c))));
  return buf;
}

}  // namespace skelgen::cli
