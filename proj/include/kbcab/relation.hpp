#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace kbcab {

// The five lexical relations the abduction step scores. The numeric values
// are the relation ids every Vocabulary starts with.
enum class Relation : int {
  synonym = 0,
  hypernym = 1,
  antonym = 2,
  hyponym = 3,
  derivationally_related = 4,
};

inline constexpr std::array<Relation, 5> kAllRelations = {
    Relation::synonym, Relation::hypernym, Relation::antonym, Relation::hyponym,
    Relation::derivationally_related};

inline constexpr std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::synonym: return "synonym";
    case Relation::hypernym: return "hypernym";
    case Relation::antonym: return "antonym";
    case Relation::hyponym: return "hyponym";
    case Relation::derivationally_related: return "derivationally-related";
  }
  return "";
}

inline std::optional<Relation> parse_relation(std::string_view name) {
  for (Relation r : kAllRelations)
    if (relation_name(r) == name) return r;
  if (name == "derivationally_related") return Relation::derivationally_related;
  return std::nullopt;
}

}  // namespace kbcab
