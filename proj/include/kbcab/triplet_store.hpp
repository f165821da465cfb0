#pragma once

#include <compare>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "kbcab/vocabulary.hpp"

namespace kbcab {

struct Triplet {
  EntityId s = 0;
  RelationId r = 0;
  EntityId o = 0;

  auto operator<=>(const Triplet&) const = default;
};

// Duplicate-free triplet set with (s,r)->objects and (o,r)->subjects indexes.
// Index lists are kept sorted. Safe for concurrent readers once built.
class TripletStore {
 public:
  TripletStore() = default;
  explicit TripletStore(std::span<const Triplet> triplets) {
    for (const Triplet& t : triplets) insert(t);
  }

  // Returns false when the triplet was already present.
  bool insert(const Triplet& t);

  bool contains(const Triplet& t) const { return triplets_.contains(t); }
  bool contains(EntityId s, RelationId r, EntityId o) const { return contains(Triplet{s, r, o}); }

  std::span<const EntityId> objects(EntityId s, RelationId r) const;
  std::span<const EntityId> subjects(EntityId o, RelationId r) const;

  std::size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }

  const std::set<Triplet>& triplets() const { return triplets_; }
  std::vector<Triplet> to_vector() const { return {triplets_.begin(), triplets_.end()}; }

  // All (s,r) keys with at least one object, in sorted order.
  std::vector<std::pair<EntityId, RelationId>> subject_relation_keys() const;

 private:
  std::set<Triplet> triplets_;
  std::map<std::pair<EntityId, RelationId>, std::vector<EntityId>> index_sr_;
  std::map<std::pair<EntityId, RelationId>, std::vector<EntityId>> index_or_;
};

}  // namespace kbcab
