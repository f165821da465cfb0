#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "kbcab/complex_model.hpp"
#include "kbcab/triplet_store.hpp"

namespace kbcab {

// Known true triplets (train + dev) excluded from the candidate list.
using FilterSet = TripletStore;

struct RankingMetrics {
  double mrr = 0.0;              // x100
  std::map<int, double> hits;    // N -> percentage, N in {1, 3, 10}
  std::size_t count = 0;

  // {"mrr":..,"hits1":..,"hits3":..,"hits10":..,"count":..}
  std::string to_json() const;
};

// 1 + number of unfiltered candidates scoring strictly above the gold object.
// The gold object is always a candidate; ties do not count against it.
std::size_t filtered_rank(const ModelParams& p, const Triplet& gold, const FilterSet& filter);
// Same, against every entity (debugging aid).
std::size_t raw_rank(const ModelParams& p, const Triplet& gold);

// Object-side ranking over `dev`. Throws ArgumentError on empty dev.
RankingMetrics evaluate(const ModelParams& p, std::span<const Triplet> dev, const FilterSet& filter,
                        bool filtered = true);

}  // namespace kbcab
