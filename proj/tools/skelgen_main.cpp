// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "skelgen/cli/commands.hpp"
#include "skelgen/error.hpp"

using namespace skelgen;
using namespace skelgen::cli;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool strict = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  if (with_config) cmd->add_option("--config", c.config, "JSON run config");
  cmd->add_option("--seed", c.seed, "Seed (overrides the config)");
  cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  cmd->add_flag("--strict", c.strict, "Fail on malformed corpus lines instead of skipping them");
}

// Config file plus flag overrides; flags win.
struct Overrides {
  std::optional<std::string> variant, repr, corpus, eval_corpus, lexicons, dii_policy;
  std::optional<double> alpha, lr;
  std::optional<std::size_t> epochs, batch_size, max_steps;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--variant", o.variant, "baseline | skeleton_informed | mtg | glocal");
  cmd->add_option("--repr", o.repr, "surface | nominalized | abstract");
  cmd->add_option("--alpha", o.alpha, "MTG loss weight");
  cmd->add_option("--corpus", o.corpus, "Training corpus (JSONL)");
  cmd->add_option("--eval-corpus", o.eval_corpus, "Held-out corpus for checkpoint selection");
  cmd->add_option("--lexicons", o.lexicons, "Lexicon directory");
  cmd->add_option("--dii-policy", o.dii_policy, "copy_sis | placeholder | provided");
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--epochs", o.epochs, "Epochs");
  cmd->add_option("--batch-size", o.batch_size, "Batch size");
  cmd->add_option("--max-steps", o.max_steps, "Optimizer step cap (0 = none)");
}

RunConfig resolve(const Common& c, const Overrides& o) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (o.variant) {
    auto v = models::parse_variant(*o.variant);
    if (!v) throw ValidationError("unknown variant " + *o.variant);
    rc.model.variant = *v;
  }
  if (o.repr) {
    auto r = skeleton::parse_repr(*o.repr);
    if (!r) throw ValidationError("unknown skeleton representation " + *o.repr);
    rc.model.skeleton_repr = *r;
  }
  if (o.dii_policy) {
    auto p = corpus::parse_dii_policy(*o.dii_policy);
    if (!p) throw ValidationError("unknown DII policy " + *o.dii_policy);
    rc.corpus.dii_policy = *p;
  }
  if (o.alpha) rc.model.alpha = *o.alpha;
  if (o.corpus) rc.corpus.train = *o.corpus;
  if (o.eval_corpus) rc.corpus.eval = *o.eval_corpus;
  if (o.lexicons) rc.corpus.lexicons = *o.lexicons;
  if (o.lr) rc.train.lr = *o.lr;
  if (o.epochs) rc.train.epochs = *o.epochs;
  if (o.batch_size) rc.train.batch_size = *o.batch_size;
  if (o.max_steps) rc.train.max_steps = *o.max_steps;
  if (c.strict) rc.corpus.strict = true;
  if (c.seed) apply_seed(rc, *c.seed);
  return rc;
}

std::optional<fs::path> opt_path(const std::optional<std::string>& s) {
  return s ? std::optional<fs::path>(*s) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-skeleton visual storytelling: extraction, training, generation, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // extract
  Common ex_c;
  std::string ex_corpus, ex_repr = "surface";
  std::optional<std::string> ex_lex;
  auto* extract = app.add_subcommand("extract", "Extract the central entity skeleton of each story");
  add_common(extract, ex_c, false);
  extract->add_option("--corpus", ex_corpus, "Corpus (JSONL)")->required();
  extract->add_option("--repr", ex_repr, "surface | nominalized | abstract")->capture_default_str();
  extract->add_option("--lexicons", ex_lex, "Lexicon directory");

  // train
  Common tr_c;
  Overrides tr_o;
  auto* train = app.add_subcommand("train", "Train a model variant");
  add_common(train, tr_c, true);
  add_overrides(train, tr_o);

  // generate
  Common ge_c;
  std::string ge_ckpt, ge_corpus;
  std::optional<std::string> ge_lex;
  models::GenerateOptions ge_opts;
  std::size_t ge_batch = 16, ge_top = 10;
  auto* generate = app.add_subcommand("generate", "Generate stories from a checkpoint");
  add_common(generate, ge_c, true);
  generate->add_option("--checkpoint", ge_ckpt, "Checkpoint (.sklg)")->required();
  generate->add_option("--corpus", ge_corpus, "Stories to generate for (JSONL)")->required();
  generate->add_option("--lexicons", ge_lex, "Lexicon directory");
  generate->add_option("--max-len", ge_opts.max_len, "Tokens per sentence")->capture_default_str();
  generate->add_flag("--sample", ge_opts.sample, "Temperature sampling instead of greedy decoding");
  generate->add_option("--temperature", ge_opts.temperature, "Sampling temperature")->capture_default_str();
  generate->add_option("--batch-size", ge_batch, "Stories per batch")->capture_default_str();
  generate->add_option("--attention-top", ge_top, "Skeleton words in the attention summary")
      ->capture_default_str();

  // eval
  Common ev_c;
  std::string ev_gen, ev_refs;
  std::optional<std::string> ev_lex;
  auto* evaluate = app.add_subcommand("eval", "Score generated stories against references");
  add_common(evaluate, ev_c, false);
  evaluate->add_option("--generated", ev_gen, "generated.jsonl")->required();
  evaluate->add_option("--references", ev_refs, "Reference corpus (JSONL)")->required();
  evaluate->add_option("--lexicons", ev_lex, "Lexicon directory");

  // gradcheck
  Common gc_c;
  Overrides gc_o;
  GradcheckArgs gc_a;
  std::string gc_fault = "none";
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check on a 2-story batch");
  add_common(gradcheck, gc_c, true);
  add_overrides(gradcheck, gc_o);
  gradcheck->add_option("--max-entries", gc_a.max_entries, "Entries per parameter (0 = all)")
      ->capture_default_str();
  gradcheck->add_option("--tolerance", gc_a.tolerance, "Relative error bound")->capture_default_str();
  gradcheck->add_option("--inject-fault", gc_fault)
      ->check(CLI::IsMember({"none", "tanh", "sigmoid", "matmul"}))
      ->group("");

  // stats
  Common st_c;
  std::string st_corpus;
  std::optional<std::string> st_lex;
  std::size_t st_min = 1;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  add_common(stats, st_c, false);
  stats->add_option("--corpus", st_corpus, "Corpus (JSONL)")->required();
  stats->add_option("--lexicons", st_lex, "Lexicon directory");
  stats->add_option("--min-count", st_min, "Vocabulary frequency floor")->capture_default_str();

  // synth
  Common sy_c;
  corpus::SynthOptions sy_o;
  std::string sy_name = "planted.jsonl";
  auto* synth = app.add_subcommand("synth", "Write a planted synthetic corpus");
  add_common(synth, sy_c, false);
  synth->add_option("--stories", sy_o.stories)->capture_default_str();
  synth->add_option("--feature-dim", sy_o.feature_dim)->capture_default_str();
  synth->add_option("--distractors", sy_o.distractors)->capture_default_str();
  synth->add_option("--missing-dii-rate", sy_o.missing_dii_rate)->capture_default_str();
  synth->add_option("--name", sy_name, "Output file name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  return guarded(
      [&]() -> int {
        if (*extract) {
          auto repr = skeleton::parse_repr(ex_repr);
          if (!repr) throw ValidationError("unknown skeleton representation " + ex_repr);
          cmd_extract({ex_corpus, opt_path(ex_lex), *repr, ex_c.out_dir, ex_c.strict}, std::cout);
        } else if (*train) {
          const auto rc = resolve(tr_c, tr_o);
          validate(rc);
          cmd_train(rc, tr_c.out_dir, std::cout);
        } else if (*generate) {
          if (!ge_c.config.empty()) {
            const auto rc = load_run_config(ge_c.config);
            if (generate->count("--max-len") == 0) ge_opts.max_len = rc.generate.max_len;
            if (generate->count("--sample") == 0) ge_opts.sample = rc.generate.sample;
            if (generate->count("--temperature") == 0) ge_opts.temperature = rc.generate.temperature;
            if (generate->count("--attention-top") == 0) ge_top = rc.attention_top;
            if (rc.seed) ge_opts.seed = *rc.seed;
          }
          if (ge_c.seed) ge_opts.seed = *ge_c.seed;
          GenerateArgs a{ge_ckpt, ge_corpus, opt_path(ge_lex), ge_c.out_dir, ge_opts, ge_batch,
                         ge_c.strict, ge_top};
          cmd_generate(a, std::cout);
        } else if (*evaluate) {
          cmd_eval({ev_gen, ev_refs, opt_path(ev_lex), ev_c.out_dir, ev_c.strict}, std::cout);
        } else if (*gradcheck) {
          auto rc = resolve(gc_c, gc_o);
          static const std::map<std::string, ad::testing::Fault> faults = {
              {"none", ad::testing::Fault::kNone},
              {"tanh", ad::testing::Fault::kTanhBackward},
              {"sigmoid", ad::testing::Fault::kSigmoidBackward},
              {"matmul", ad::testing::Fault::kMatmulBackward}};
          gc_a.fault = faults.at(gc_fault);
          const auto report = cmd_gradcheck(rc, gc_a, gc_c.out_dir, std::cout);
          return report.passed(gc_a.tolerance) ? kExitOk : kExitRuntime;
        } else if (*stats) {
          cmd_stats({st_corpus, opt_path(st_lex), st_c.out_dir, st_min, st_c.strict}, std::cout);
        } else if (*synth) {
          if (sy_c.seed) sy_o.seed = *sy_c.seed;
          cmd_synth(sy_o, sy_c.out_dir, sy_name, std::cout);
        }
        return kExitOk;
      },
      std::cerr);
}
