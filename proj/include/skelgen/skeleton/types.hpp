// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace skelgen::skeleton {

inline constexpr std::size_t kStoryLength = 5;

enum class Category : std::uint8_t { kPerson, kLocation, kObject, kOther };

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view s);

struct Mention {
  std::size_t sentence = 0;  // 0..4
  std::size_t start = 0;     // token span [start, end)
  std::size_t end = 0;
  std::string text;          // verbatim surface
  std::string head;          // lowercase head token, the skeleton-vocabulary key
  bool is_pronoun = false;
  Category category = Category::kOther;
  std::size_t nouns = 0;     // noun tokens covered (2 for "X and Y"), 0 for pronouns

  bool before(const Mention& o) const {
    return sentence != o.sentence ? sentence < o.sentence : start < o.start;
  }
  bool operator==(const Mention&) const = default;
};

// Mentions sorted by (sentence, start); never empty, never overlapping.
struct CorefChain {
  std::vector<Mention> mentions;

  std::size_t covered_sentences() const;
  const Mention& first() const { return mentions.front(); }
  bool operator==(const CorefChain&) const = default;
};

enum class Repr : std::uint8_t { kSurface, kNominalized, kAbstract };

std::string_view to_string(Repr r);
std::optional<Repr> parse_repr(std::string_view s);

struct NominalSlot {
  std::uint8_t h = 0;  // 1 iff the chain has a mention in this sentence
  std::uint8_t p = 0;  // 1 iff that mention is a pronoun
  bool operator==(const NominalSlot&) const = default;
};

using SurfaceSlots = std::array<std::optional<std::string>, kStoryLength>;
using NominalSlots = std::array<NominalSlot, kStoryLength>;
using AbstractSlots = std::array<std::optional<Category>, kStoryLength>;

// One central chain rendered per sentence. The variant index matches Repr.
struct EntitySkeleton {
  std::variant<SurfaceSlots, NominalSlots, AbstractSlots> slots;

  Repr kind() const { return static_cast<Repr>(slots.index()); }
  bool operator==(const EntitySkeleton&) const = default;
};

using PresenceVector = std::array<std::uint8_t, kStoryLength>;

}  // namespace skelgen::skeleton
