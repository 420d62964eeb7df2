// SPDX-License-Identifier: Apache-2.0
#include "skelgen/models/config.hpp"

#include <cmath>

#include "json.hpp"
#include "skelgen/error.hpp"

namespace skelgen::models {

using nlohmann::json;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kSkeletonInformed: return "skeleton_informed";
    case Variant::kMtg: return "mtg";
    case Variant::kGlocal: return "glocal";
  }
  return "baseline";
}

std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "baseline") return Variant::kBaseline;
  if (s == "skeleton_informed") return Variant::kSkeletonInformed;
  if (s == "mtg") return Variant::kMtg;
  if (s == "glocal") return Variant::kGlocal;
  return std::nullopt;
}

ModelConfig ModelConfig::paper(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.embed_dim = 256;
  c.hidden_dim = 1024;
  c.image_dim = 1024;
  c.attn_dim = 256;
  c.skeleton_vocab_k = 50;
  c.encoder_layers = 2;
  return c;
}

ModelConfig ModelConfig::desk(Variant v) {
  ModelConfig c;
  c.variant = v;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ValidationError(std::string("model.") + name + " must be positive");
  };
  positive(embed_dim, "embed_dim");
  positive(hidden_dim, "hidden_dim");
  positive(image_dim, "image_dim");
  positive(attn_dim, "attn_dim");
  positive(skeleton_vocab_k, "skeleton_vocab_k");
  positive(encoder_layers, "encoder_layers");
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0) {
    throw ValidationError("model.alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (variant == Variant::kGlocal && skeleton_repr != skeleton::Repr::kSurface) {
    throw ValidationError("the glocal variant attends over surface skeleton words; set "
                          "model.skeleton_repr to surface");
  }
}

std::string bundle_to_json(const ModelBundle& b) {
  const auto& c = b.config;
  json j;
  j["model"] = {
      {"variant", to_string(c.variant)},
      {"embed_dim", c.embed_dim},
      {"hidden_dim", c.hidden_dim},
      {"image_dim", c.image_dim},
      {"attn_dim", c.attn_dim},
      {"skeleton_vocab_k", c.skeleton_vocab_k},
      {"encoder_layers", c.encoder_layers},
      {"alpha", c.alpha},
      {"skeleton_repr", skeleton::to_string(c.skeleton_repr)},
      {"seed", c.seed},
      {"vocab_size", c.vocab_size},
      {"skeleton_classes", c.skeleton_classes},
  };
  j["encode"] = {{"dii_policy", corpus::to_string(b.dii_policy)},
                 {"max_sentence_len", b.max_sentence_len}};
  j["vocab"] = b.vocab.tokens();
  j["skeleton_vocab"] = b.skeleton_vocab.tokens();
  return j.dump();
}

ModelBundle bundle_from_json(const std::string& s) {
  try {
    const json j = json::parse(s);
    const auto& m = j.at("model");
    ModelBundle b;
    auto& c = b.config;
    const auto variant = parse_variant(m.at("variant").get<std::string>());
    const auto repr = skeleton::parse_repr(m.at("skeleton_repr").get<std::string>());
    if (!variant || !repr) throw ValidationError("checkpoint config has an unknown variant or representation");
    c.variant = *variant;
    c.skeleton_repr = *repr;
    c.embed_dim = m.at("embed_dim").get<std::size_t>();
    c.hidden_dim = m.at("hidden_dim").get<std::size_t>();
    c.image_dim = m.at("image_dim").get<std::size_t>();
    c.attn_dim = m.at("attn_dim").get<std::size_t>();
    c.skeleton_vocab_k = m.at("skeleton_vocab_k").get<std::size_t>();
    c.encoder_layers = m.at("encoder_layers").get<std::size_t>();
    c.alpha = m.at("alpha").get<double>();
    c.seed = m.at("seed").get<std::uint64_t>();
    c.vocab_size = m.at("vocab_size").get<std::size_t>();
    c.skeleton_classes = m.at("skeleton_classes").get<std::size_t>();
    b.vocab = corpus::Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    b.skeleton_vocab =
        corpus::SkeletonVocab::from_tokens(j.at("skeleton_vocab").get<std::vector<std::string>>());
    if (j.contains("encode")) {
      const auto& e = j.at("encode");
      const auto policy = corpus::parse_dii_policy(e.at("dii_policy").get<std::string>());
      if (!policy) throw ValidationError("checkpoint config has an unknown dii_policy");
      b.dii_policy = *policy;
      b.max_sentence_len = e.at("max_sentence_len").get<std::size_t>();
    }
    c.validate();
    return b;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint config: ") + e.what());
  }
}

}  // namespace skelgen::models
