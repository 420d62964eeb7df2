// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "skelgen/corpus/corpus.hpp"
#include "skelgen/models/model.hpp"
#include "skelgen/models/train.hpp"

namespace skelgen::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct CorpusSection {
  std::filesystem::path train;
  std::optional<std::filesystem::path> eval;
  std::optional<std::filesystem::path> lexicons;  // directory; built-in lists when unset
  std::size_t feature_dim = 0;                    // 0 = infer from the first story
  corpus::DiiPolicy dii_policy = corpus::DiiPolicy::kCopySis;
  std::size_t max_sentence_len = 0;
  std::size_t min_count = 1;
  std::size_t max_vocab = 0;
  bool strict = false;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  CorpusSection corpus;
  models::ModelConfig model;
  models::TrainConfig train;
  models::GenerateOptions generate;
  std::size_t attention_top = 10;
};

// Parses a JSON config document. Relative paths resolve against `base_dir`.
// Unknown keys and ill-typed values throw ValidationError.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Seed present, model settings valid, referenced paths exist.
void validate(const RunConfig& c, bool need_train_corpus = true);

// Copies the top-level seed into the model, training and sampling seeds.
void apply_seed(RunConfig& c, std::uint64_t seed);

// Canonical form used for the manifest hash.
std::string run_config_to_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

}  // namespace skelgen::cli
