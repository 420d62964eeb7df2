// SPDX-License-Identifier: Apache-2.0
#include "skelgen/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "skelgen/autodiff/checkpoint.hpp"
#include "skelgen/error.hpp"
#include "skelgen/rng.hpp"
#include "skelgen/text.hpp"

namespace skelgen::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_hex(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
  return buf;
}

corpus::LoadResult load_logged(const fs::path& path, const corpus::LoadOptions& opts,
                               const skeleton::Lexicons& lex, std::ostream& log) {
  auto r = corpus::load_corpus(path, opts, lex);
  for (const auto& w : r.warnings) log << "warning: " << path.string() << " " << w << "\n";
  if (r.stories.empty()) throw ValidationError("no usable stories in " + path.string());
  return r;
}

void check_feature_dim(const std::vector<corpus::Story>& stories, std::size_t image_dim,
                       const std::string& source) {
  const std::size_t d = stories.front().steps.front().image_features.size();
  if (d != image_dim) {
    throw ValidationError("feature dimension mismatch: corpus has D=" + std::to_string(d) + ", " +
                          source + " expects image_dim=" + std::to_string(image_dim));
  }
}

json skeleton_json(const skeleton::EntitySkeleton& sk) {
  json out = json::array();
  std::visit(
      [&](const auto& slots) {
        for (const auto& slot : slots) {
          using T = std::decay_t<decltype(slot)>;
          if constexpr (std::is_same_v<T, skeleton::NominalSlot>) {
            out.push_back({slot.h, slot.p});
          } else if constexpr (std::is_same_v<T, std::optional<skeleton::Category>>) {
            out.push_back(slot ? json(std::string(skeleton::to_string(*slot))) : json(nullptr));
          } else {
            out.push_back(slot ? json(*slot) : json(nullptr));
          }
        }
      },
      sk.slots);
  return out;
}

std::string pad3(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", n);
  return buf;
}

std::string epoch_line(const models::EpochLog& e, std::optional<double> eval_loss) {
  char buf[256];
  int n = std::snprintf(buf, sizeof buf, "epoch %zu steps %zu loss %.6f L1 %.6f", e.epoch, e.steps,
                        e.loss, e.story_loss);
  if (e.skeleton_loss) n += std::snprintf(buf + n, sizeof buf - n, " L2 %.6f", *e.skeleton_loss);
  if (eval_loss) std::snprintf(buf + n, sizeof buf - n, " eval %.6f", *eval_loss);
  return buf;
}

}  // namespace

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

skeleton::Lexicons load_lexicons(const std::optional<fs::path>& dir) {
  auto lex = dir ? skeleton::Lexicons::load_dir(*dir) : skeleton::Lexicons::builtin();
  lex.validate();
  return lex;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::string& settings_json, const std::vector<std::string>& outputs) {
  ordered_json m;
  m["tool"] = "skelgen";
  m["version"] = std::string(kToolVersion);
  m["checkpoint_format"] = ad::kCheckpointVersion;
  m["compiler"] = __VERSION__;
  m["command"] = command;
  m["config_hash"] = hash_hex(settings_json);
  m["config"] = ordered_json::parse(settings_json);
  m["outputs"] = outputs;
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

void cmd_extract(const ExtractArgs& a, std::ostream& log) {
  const auto lex = load_lexicons(a.lexicons);
  const auto r = load_logged(a.corpus, {0, a.strict}, lex, log);
  ensure_dir(a.out_dir);
  std::string out;
  std::size_t with_chain = 0;
  for (const auto& story : r.stories) {
    const auto chain = corpus::central_chain(story, lex);
    const auto sk = chain ? skeleton::render(*chain, a.repr, lex) : skeleton::empty_skeleton(a.repr);
    ordered_json j;
    j["id"] = story.id;
    j["repr"] = std::string(skeleton::to_string(a.repr));
    j["skeleton"] = skeleton_json(sk);
    j["presence"] = skeleton::presence_vector(sk);
    json mentions = json::array();
    if (chain) {
      ++with_chain;
      for (const auto& m : chain->mentions) {
        mentions.push_back({{"sentence", m.sentence}, {"start", m.start}, {"end", m.end},
                            {"text", m.text}, {"pronoun", m.is_pronoun}});
      }
    }
    j["chain"] = mentions;
    out += j.dump() + "\n";
  }
  write_file(a.out_dir / "skeletons.jsonl", out);
  ordered_json settings;
  settings["corpus"] = a.corpus.string();
  settings["lexicons"] = a.lexicons ? json(a.lexicons->string()) : json(nullptr);
  settings["repr"] = std::string(skeleton::to_string(a.repr));
  settings["strict"] = a.strict;
  write_manifest(a.out_dir, "extract", settings.dump(), {"skeletons.jsonl"});
  log << "extracted " << r.stories.size() << " skeletons (" << with_chain
      << " with a central chain) -> " << (a.out_dir / "skeletons.jsonl").string() << "\n";
}

Prepared prepare_training(const RunConfig& c, const skeleton::Lexicons& lex, std::ostream& log) {
  Prepared p;
  p.stories = load_logged(c.corpus.train, {c.corpus.feature_dim, c.corpus.strict}, lex, log).stories;
  check_feature_dim(p.stories, c.model.image_dim, "the model config");
  auto& b = p.bundle;
  b.config = c.model;
  b.vocab = corpus::Vocab::build(p.stories, c.corpus.min_count, c.corpus.max_vocab);
  b.skeleton_vocab = corpus::SkeletonVocab::build(p.stories, c.model.skeleton_vocab_k, lex);
  b.dii_policy = c.corpus.dii_policy;
  b.max_sentence_len = c.corpus.max_sentence_len;
  b.config.vocab_size = b.vocab.size();
  b.config.skeleton_classes = corpus::skeleton_class_count(c.model.skeleton_repr, b.skeleton_vocab);
  p.data = corpus::encode_corpus(p.stories, b.vocab, b.skeleton_vocab, lex,
                                 {c.model.skeleton_repr, b.dii_policy, b.max_sentence_len});
  return p;
}

std::vector<models::EpochLog> cmd_train(const RunConfig& c, const fs::path& out_dir,
                                        std::ostream& log) {
  validate(c);
  const auto lex = load_lexicons(c.corpus.lexicons);
  auto prep = prepare_training(c, lex, log);
  std::vector<corpus::EncodedStory> eval_data;
  if (c.corpus.eval) {
    auto ev = load_logged(*c.corpus.eval, {c.corpus.feature_dim, c.corpus.strict}, lex, log).stories;
    check_feature_dim(ev, c.model.image_dim, "the model config");
    eval_data = corpus::encode_corpus(ev, prep.bundle.vocab, prep.bundle.skeleton_vocab, lex,
                                      {c.model.skeleton_repr, prep.bundle.dii_policy,
                                       prep.bundle.max_sentence_len});
  }
  const auto& cfg = prep.bundle.config;
  ensure_dir(out_dir / "checkpoints");
  log << "training " << models::to_string(cfg.variant) << " on " << prep.data.size()
      << " stories, vocab " << cfg.vocab_size << ", skeleton classes " << cfg.skeleton_classes << "\n";

  ad::ParamStore params;
  models::init_params(cfg, params);
  const std::string bundle_json = models::bundle_to_json(prep.bundle);
  std::string train_log;
  std::vector<std::string> outputs = {"train_log.jsonl"};
  std::optional<double> best;
  auto logs = models::train(cfg, c.train, params, prep.data, [&](const models::EpochLog& e) {
    std::optional<double> eval_loss;
    if (!eval_data.empty()) {
      eval_loss = models::evaluate_loss(cfg, params, eval_data, c.train.batch_size).loss;
    }
    ordered_json j;
    j["epoch"] = e.epoch;
    j["steps"] = e.steps;
    j["loss"] = e.loss;
    j["story_loss"] = e.story_loss;
    if (e.skeleton_loss) j["skeleton_loss"] = *e.skeleton_loss;
    if (eval_loss) j["eval_loss"] = *eval_loss;
    train_log += j.dump() + "\n";
    log << epoch_line(e, eval_loss) << "\n";

    const std::string bytes = ad::encode_checkpoint(bundle_json, params);
    const std::string name = "checkpoints/epoch_" + pad3(e.epoch) + ".sklg";
    write_file(out_dir / name, bytes);
    outputs.push_back(name);
    const double score = eval_loss.value_or(e.loss);
    if (!best || score < *best) {
      best = score;
      write_file(out_dir / "best.sklg", bytes);
    }
  });
  write_file(out_dir / "train_log.jsonl", train_log);
  if (best) outputs.push_back("best.sklg");
  write_manifest(out_dir, "train", run_config_to_json(c), outputs);
  return logs;
}

std::vector<GeneratedRecord> cmd_generate(const GenerateArgs& a, std::ostream& log) {
  if (a.batch_size == 0) throw ValidationError("batch size must be positive");
  const auto ckpt = ad::load_checkpoint(a.checkpoint);
  const auto bundle = models::bundle_from_json(ckpt.config);
  const auto& cfg = bundle.config;
  const auto lex = load_lexicons(a.lexicons);
  const auto stories = load_logged(a.corpus, {0, a.strict}, lex, log).stories;
  check_feature_dim(stories, cfg.image_dim, "checkpoint " + a.checkpoint.filename().string());
  const auto data = corpus::encode_corpus(stories, bundle.vocab, bundle.skeleton_vocab, lex,
                                          {cfg.skeleton_repr, bundle.dii_policy, bundle.max_sentence_len});
  ensure_dir(a.out_dir);
  const bool glocal = cfg.variant == models::Variant::kGlocal;
  if (glocal) ensure_dir(a.out_dir / "attention");

  std::vector<GeneratedRecord> records;
  std::vector<models::AttentionMaps> maps;
  std::vector<std::vector<std::string>> labels;
  std::vector<std::string> outputs = {"generated.jsonl"};
  std::string out;
  for (std::size_t first = 0, bi = 0; first < data.size(); first += a.batch_size, ++bi) {
    std::vector<std::size_t> members;
    for (std::size_t i = first; i < std::min(first + a.batch_size, data.size()); ++i) members.push_back(i);
    const auto batch = corpus::make_batch(data, members);
    auto opts = a.options;
    opts.seed = a.options.seed + bi;
    for (const auto& g : models::generate_story(ckpt.params, cfg, batch, opts)) {
      const auto& story = stories[g.source];
      const auto& enc = data[g.source];
      GeneratedRecord rec;
      rec.id = story.id;
      std::vector<std::string> lines;
      for (const auto& ids : g.sentences) {
        rec.sentences.push_back(bundle.vocab.decode(ids));
        lines.push_back(text::join(rec.sentences.back()));
      }
      for (auto cls : g.predicted_skeleton) {
        rec.predicted_skeleton.push_back(
            corpus::skeleton_class_label(cls, cfg.skeleton_repr, bundle.skeleton_vocab));
      }
      ordered_json j;
      j["id"] = rec.id;
      j["sentences"] = lines;
      if (!rec.predicted_skeleton.empty()) j["predicted_skeleton"] = rec.predicted_skeleton;
      out += j.dump() + "\n";

      if (glocal && g.attention) {
        std::vector<std::string> slot_labels;
        for (auto cls : enc.skeleton) {
          slot_labels.push_back(corpus::skeleton_class_label(cls, cfg.skeleton_repr, bundle.skeleton_vocab));
        }
        std::vector<skeleton::Sentence> words;
        for (const auto& ids : enc.dii) {
          skeleton::Sentence w;
          for (auto id : ids) w.push_back(bundle.vocab.token(id));
          words.push_back(std::move(w));
        }
        eval::export_attention(*g.attention, slot_labels, words, a.out_dir / "attention", story.id);
        outputs.push_back("attention/" + story.id + "_sentence.csv");
        outputs.push_back("attention/" + story.id + "_word.csv");
        maps.push_back(*g.attention);
        labels.push_back(slot_labels);
      }
      records.push_back(std::move(rec));
    }
  }
  write_file(a.out_dir / "generated.jsonl", out);
  if (glocal) {
    eval::export_attention_summary(eval::summarize_attention(maps, labels, a.attention_top),
                                   a.out_dir / "attention" / "summary.csv");
    outputs.push_back("attention/summary.csv");
  }
  ordered_json settings;
  settings["checkpoint"] = a.checkpoint.string();
  settings["checkpoint_hash"] = hash_hex(read_file(a.checkpoint));
  settings["corpus"] = a.corpus.string();
  settings["lexicons"] = a.lexicons ? json(a.lexicons->string()) : json(nullptr);
  settings["max_len"] = a.options.max_len;
  settings["sample"] = a.options.sample;
  settings["temperature"] = a.options.temperature;
  settings["seed"] = a.options.seed;
  settings["batch_size"] = a.batch_size;
  write_manifest(a.out_dir, "generate", settings.dump(), outputs);
  log << "generated " << records.size() << " stories -> " << (a.out_dir / "generated.jsonl").string()
      << "\n";
  return records;
}

std::vector<eval::NamedStory> load_generated(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<eval::NamedStory> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      eval::NamedStory s;
      s.id = j.at("id").get<std::string>();
      for (const auto& sent : j.at("sentences")) s.sentences.push_back(text::tokenize(sent.get<std::string>()));
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

eval::EvalReport cmd_eval(const EvalArgs& a, std::ostream& log) {
  const auto lex = load_lexicons(a.lexicons);
  const auto refs = load_logged(a.references, {0, a.strict}, lex, log).stories;
  std::vector<eval::NamedStory> ref_text;
  for (const auto& s : refs) ref_text.push_back({s.id, s.sis()});
  const auto gen = load_generated(a.generated);
  const auto report = eval::evaluate(eval::align_by_id(ref_text, gen), lex);
  ensure_dir(a.out_dir);
  write_file(a.out_dir / "eval_report.json", eval::report_to_json(report));
  write_file(a.out_dir / "eval_report.txt", eval::report_table(report));
  ordered_json settings;
  settings["generated"] = a.generated.string();
  settings["references"] = a.references.string();
  settings["lexicons"] = a.lexicons ? json(a.lexicons->string()) : json(nullptr);
  write_manifest(a.out_dir, "eval", settings.dump(), {"eval_report.json", "eval_report.txt"});
  log << eval::report_table(report);
  return report;
}

ad::GradCheckReport cmd_gradcheck(const RunConfig& c, const GradcheckArgs& a,
                                  const fs::path& out_dir, std::ostream& log) {
  validate(c, false);
  const auto lex = load_lexicons(c.corpus.lexicons);
  corpus::SynthOptions so;
  so.stories = 2;
  so.feature_dim = c.model.image_dim;
  so.seed = *c.seed;
  const auto stories = corpus::make_planted_corpus(so);
  auto cfg = c.model;
  const auto vocab = corpus::Vocab::build(stories, 1, 0);
  const auto skv = corpus::SkeletonVocab::build(stories, cfg.skeleton_vocab_k, lex);
  cfg.vocab_size = vocab.size();
  cfg.skeleton_classes = corpus::skeleton_class_count(cfg.skeleton_repr, skv);
  const auto data = corpus::encode_corpus(stories, vocab, skv, lex, {cfg.skeleton_repr, {}, 0});
  const auto batch = corpus::make_batch(data, {0, 1});
  ad::ParamStore params;
  models::init_params(cfg, params);

  struct FaultGuard {
    explicit FaultGuard(ad::testing::Fault f) { ad::testing::set_fault(f); }
    ~FaultGuard() { ad::testing::set_fault(ad::testing::Fault::kNone); }
  } guard(a.fault);
  ad::GradCheckOptions go;
  go.max_entries = a.max_entries;
  go.seed = *c.seed;
  const auto report = ad::grad_check(
      [&](ad::Tape& tape) {
        ad::ParamBinding p(tape, params);
        return models::forward(p, cfg, batch).loss;
      },
      params, go);

  ordered_json j;
  j["variant"] = std::string(models::to_string(cfg.variant));
  j["tolerance"] = a.tolerance;
  j["max_rel_error"] = report.max_rel_error();
  j["passed"] = report.passed(a.tolerance);
  json entries = json::array();
  char buf[256];
  for (const auto& e : report.entries) {
    entries.push_back({{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"checked", e.checked},
                       {"worst_index", e.worst_index}});
    std::snprintf(buf, sizeof buf, "%-28s %.3e  (%zu entries)%s\n", e.name.c_str(), e.max_rel_error,
                  e.checked, e.max_rel_error < a.tolerance ? "" : "  FAIL");
    log << buf;
  }
  j["entries"] = entries;
  ensure_dir(out_dir);
  write_file(out_dir / "gradcheck.json", j.dump(2) + "\n");
  ordered_json settings = ordered_json::parse(run_config_to_json(c));
  settings["gradcheck"] = {{"max_entries", a.max_entries}, {"tolerance", a.tolerance}};
  write_manifest(out_dir, "gradcheck", settings.dump(), {"gradcheck.json"});
  std::snprintf(buf, sizeof buf, "%s: max relative error %.3e over %zu parameters -> %s\n",
                std::string(models::to_string(cfg.variant)).c_str(), report.max_rel_error(),
                report.entries.size(), report.passed(a.tolerance) ? "PASS" : "FAIL");
  log << buf;
  if (!report.passed(a.tolerance)) log << "worst parameter: " << report.entries.front().name << "\n";
  return report;
}

void cmd_stats(const StatsArgs& a, std::ostream& log) {
  const auto lex = load_lexicons(a.lexicons);
  const auto stories = load_logged(a.corpus, {0, a.strict}, lex, log).stories;
  const auto st = corpus::corpus_stats(stories);
  const auto vocab = corpus::Vocab::build(stories, a.min_count, 0);
  std::size_t with_chain = 0, covered = 0;
  std::vector<eval::StoryText> texts;
  for (const auto& s : stories) {
    texts.push_back(s.sis());
    if (auto chain = corpus::central_chain(s, lex)) {
      ++with_chain;
      covered += chain->covered_sentences();
    }
  }
  const auto np = eval::noun_pronoun_stats(texts, lex);
  ordered_json j;
  j["stories"] = st.stories;
  j["images"] = st.images;
  j["missing_dii"] = st.missing_dii;
  j["sis_tokens"] = st.sis_tokens;
  j["feature_dim"] = stories.front().steps.front().image_features.size();
  j["vocab_size"] = vocab.size();
  j["stories_with_skeleton"] = with_chain;
  j["mean_skeleton_coverage"] = with_chain ? static_cast<double>(covered) / static_cast<double>(with_chain) : 0.0;
  j["avg_distinct_entities"] = eval::avg_distinct_entities(texts, lex);
  j["noun_pct"] = np.noun_pct;
  j["pronoun_pct"] = np.pronoun_pct;
  ensure_dir(a.out_dir);
  write_file(a.out_dir / "stats.json", j.dump(2) + "\n");
  ordered_json settings;
  settings["corpus"] = a.corpus.string();
  settings["min_count"] = a.min_count;
  settings["lexicons"] = a.lexicons ? json(a.lexicons->string()) : json(nullptr);
  write_manifest(a.out_dir, "stats", settings.dump(), {"stats.json"});
  log << j.dump(2) << "\n";
}

void cmd_synth(const corpus::SynthOptions& o, const fs::path& out_dir, const std::string& name,
               std::ostream& log) {
  const auto stories = corpus::make_planted_corpus(o);
  ensure_dir(out_dir);
  corpus::save_corpus(out_dir / name, stories);
  ordered_json settings;
  settings["stories"] = o.stories;
  settings["feature_dim"] = o.feature_dim;
  settings["distractors"] = o.distractors;
  settings["missing_dii_rate"] = o.missing_dii_rate;
  settings["seed"] = o.seed;
  settings["id_prefix"] = o.id_prefix;
  write_manifest(out_dir, "synth", settings.dump(), {name});
  log << "wrote " << stories.size() << " planted stories -> " << (out_dir / name).string() << "\n";
}

}  // namespace skelgen::cli
