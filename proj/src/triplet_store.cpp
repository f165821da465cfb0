#include "kbcab/triplet_store.hpp"

#include <algorithm>

namespace kbcab {

namespace {

void insert_sorted(std::vector<EntityId>& list, EntityId id) {
  list.insert(std::upper_bound(list.begin(), list.end(), id), id);
}

}  // namespace

bool TripletStore::insert(const Triplet& t) {
  if (!triplets_.insert(t).second) return false;
  insert_sorted(index_sr_[{t.s, t.r}], t.o);
  insert_sorted(index_or_[{t.o, t.r}], t.s);
  return true;
}

std::span<const EntityId> TripletStore::objects(EntityId s, RelationId r) const {
  auto it = index_sr_.find({s, r});
  if (it == index_sr_.end()) return {};
  return it->second;
}

std::span<const EntityId> TripletStore::subjects(EntityId o, RelationId r) const {
  auto it = index_or_.find({o, r});
  if (it == index_or_.end()) return {};
  return it->second;
}

std::vector<std::pair<EntityId, RelationId>> TripletStore::subject_relation_keys() const {
  std::vector<std::pair<EntityId, RelationId>> keys;
  keys.reserve(index_sr_.size());
  for (const auto& [key, objs] : index_sr_) keys.push_back(key);
  return keys;
}

}  // namespace kbcab
