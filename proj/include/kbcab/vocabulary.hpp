#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kbcab {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

// Bidirectional name <-> dense id maps for entities (lemmas) and relations.
// Relation ids 0..4 are always the five core relations in Relation order;
// extra relation names are appended after them.
class Vocabulary {
 public:
  Vocabulary();

  EntityId intern_entity(std::string_view name);
  RelationId intern_relation(std::string_view name);

  std::optional<EntityId> entity_id(std::string_view name) const;
  std::optional<RelationId> relation_id(std::string_view name) const;

  const std::string& entity_name(EntityId id) const;
  const std::string& relation_name(RelationId id) const;

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }

  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

  // Rebuild from explicit name lists (checkpoint loading). Throws FormatError
  // on duplicates or when the core relations are missing from the front.
  static Vocabulary from_names(std::vector<std::string> entities, std::vector<std::string> relations);

  bool operator==(const Vocabulary& other) const {
    return entity_names_ == other.entity_names_ && relation_names_ == other.relation_names_;
  }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

}  // namespace kbcab
