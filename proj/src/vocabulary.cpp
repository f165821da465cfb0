#include "kbcab/vocabulary.hpp"

#include "kbcab/error.hpp"
#include "kbcab/relation.hpp"

namespace kbcab {

Vocabulary::Vocabulary() {
  for (Relation r : kAllRelations) intern_relation(kbcab::relation_name(r));
}

EntityId Vocabulary::intern_entity(std::string_view name) {
  auto [it, inserted] =
      entity_ids_.try_emplace(std::string(name), static_cast<EntityId>(entity_names_.size()));
  if (inserted) entity_names_.emplace_back(name);
  return it->second;
}

RelationId Vocabulary::intern_relation(std::string_view name) {
  auto [it, inserted] =
      relation_ids_.try_emplace(std::string(name), static_cast<RelationId>(relation_names_.size()));
  if (inserted) relation_names_.emplace_back(name);
  return it->second;
}

std::optional<EntityId> Vocabulary::entity_id(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::relation_id(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::entity_name(EntityId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entity_names_.size())
    throw ArgumentError("entity id out of range: " + std::to_string(id));
  return entity_names_[static_cast<std::size_t>(id)];
}

const std::string& Vocabulary::relation_name(RelationId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= relation_names_.size())
    throw ArgumentError("relation id out of range: " + std::to_string(id));
  return relation_names_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::from_names(std::vector<std::string> entities,
                                  std::vector<std::string> relations) {
  Vocabulary v;
  if (relations.size() < kAllRelations.size())
    throw FormatError("relation list is missing core relations");
  for (std::size_t i = 0; i < kAllRelations.size(); ++i) {
    if (relations[i] != kbcab::relation_name(kAllRelations[i]))
      throw FormatError("relation " + std::to_string(i) + " must be '" +
                        std::string(kbcab::relation_name(kAllRelations[i])) + "', got '" +
                        relations[i] + "'");
  }
  for (std::size_t i = kAllRelations.size(); i < relations.size(); ++i) {
    if (v.intern_relation(relations[i]) != static_cast<RelationId>(i))
      throw FormatError("duplicate relation name: " + relations[i]);
  }
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (v.intern_entity(entities[i]) != static_cast<EntityId>(i))
      throw FormatError("duplicate entity name: " + entities[i]);
  }
  return v;
}

}  // namespace kbcab
