// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skelgen/autodiff/grad_check.hpp"
#include "skelgen/autodiff/ops.hpp"
#include "skelgen/cli/run_config.hpp"
#include "skelgen/corpus/synth.hpp"
#include "skelgen/eval/metrics.hpp"

namespace skelgen::cli {

namespace fs = std::filesystem;

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Runs `body`, mapping exceptions to exit codes and printing the message to
// `err`: ValidationError and ShapeError -> 1, anything else -> 2.
int guarded(const std::function<int()>& body, std::ostream& err);

skeleton::Lexicons load_lexicons(const std::optional<fs::path>& dir);

// Writes <out_dir>/manifest.json: command, tool and format versions, the
// settings document and its hash, and the files written.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::string& settings_json, const std::vector<std::string>& outputs);

struct ExtractArgs {
  fs::path corpus;
  std::optional<fs::path> lexicons;
  skeleton::Repr repr = skeleton::Repr::kSurface;
  fs::path out_dir;
  bool strict = false;
};
// <out_dir>/skeletons.jsonl: per story the central chain, its rendering in
// the requested representation and the presence vector.
void cmd_extract(const ExtractArgs& a, std::ostream& log);

// Vocabularies, encoded data and model dimensions for a training corpus.
struct Prepared {
  std::vector<corpus::Story> stories;
  models::ModelBundle bundle;
  std::vector<corpus::EncodedStory> data;
};
Prepared prepare_training(const RunConfig& c, const skeleton::Lexicons& lex, std::ostream& log);

// <out_dir>/train_log.jsonl, checkpoints/epoch_NNN.sklg, best.sklg.
std::vector<models::EpochLog> cmd_train(const RunConfig& c, const fs::path& out_dir,
                                        std::ostream& log);

struct GenerateArgs {
  fs::path checkpoint;
  fs::path corpus;
  std::optional<fs::path> lexicons;
  fs::path out_dir;
  models::GenerateOptions options;
  std::size_t batch_size = 16;
  bool strict = false;
  std::size_t attention_top = 10;
};
// <out_dir>/generated.jsonl and, for glocal, attention/<id>_{sentence,word}.csv
// plus attention/summary.csv.
struct GeneratedRecord {
  std::string id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> predicted_skeleton;
};
std::vector<GeneratedRecord> cmd_generate(const GenerateArgs& a, std::ostream& log);

struct EvalArgs {
  fs::path generated;
  fs::path references;
  std::optional<fs::path> lexicons;
  fs::path out_dir;
  bool strict = false;
};
std::vector<eval::NamedStory> load_generated(const fs::path& path);
// <out_dir>/eval_report.json and eval_report.txt.
eval::EvalReport cmd_eval(const EvalArgs& a, std::ostream& log);

struct GradcheckArgs {
  std::size_t max_entries = 20;  // 0 = every entry
  double tolerance = 1e-3;
  ad::testing::Fault fault = ad::testing::Fault::kNone;
};
// Finite-difference check of the configured variant on a seeded 2-story
// planted batch. <out_dir>/gradcheck.json lists every parameter once.
ad::GradCheckReport cmd_gradcheck(const RunConfig& c, const GradcheckArgs& a,
                                  const fs::path& out_dir, std::ostream& log);

struct StatsArgs {
  fs::path corpus;
  std::optional<fs::path> lexicons;
  fs::path out_dir;
  std::size_t min_count = 1;
  bool strict = false;
};
void cmd_stats(const StatsArgs& a, std::ostream& log);

// Writes a planted synthetic corpus to <out_dir>/<name>.
void cmd_synth(const corpus::SynthOptions& o, const fs::path& out_dir, const std::string& name,
               std::ostream& log);

}  // namespace skelgen::cli
