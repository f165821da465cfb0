#include "kbcab/ranking_eval.hpp"

#include <cstdio>

#include "kbcab/error.hpp"

namespace kbcab {

namespace {

void check_gold(const ModelParams& p, const Triplet& gold) {
  if (gold.s < 0 || static_cast<std::size_t>(gold.s) >= p.entity_count() || gold.o < 0 ||
      static_cast<std::size_t>(gold.o) >= p.entity_count() || gold.r < 0 ||
      static_cast<std::size_t>(gold.r) >= p.relation_count())
    throw ArgumentError("gold triplet ids out of range");
}

std::size_t rank_against(const std::vector<double>& scores, const Triplet& gold,
                         const FilterSet* filter) {
  const double target = scores[static_cast<std::size_t>(gold.o)];
  std::size_t rank = 1;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (scores[e] <= target) continue;
    if (filter && filter->contains(gold.s, gold.r, static_cast<EntityId>(e))) continue;
    ++rank;
  }
  return rank;
}

}  // namespace

std::size_t filtered_rank(const ModelParams& p, const Triplet& gold, const FilterSet& filter) {
  check_gold(p, gold);
  return rank_against(score_1n(p, gold.s, gold.r), gold, &filter);
}

std::size_t raw_rank(const ModelParams& p, const Triplet& gold) {
  check_gold(p, gold);
  return rank_against(score_1n(p, gold.s, gold.r), gold, nullptr);
}

RankingMetrics evaluate(const ModelParams& p, std::span<const Triplet> dev, const FilterSet& filter,
                        bool filtered) {
  if (dev.empty()) throw ArgumentError("empty dev set");
  // rank histogram, summed in rank order so the result does not depend on dev order
  std::map<std::size_t, std::size_t> ranks;
  for (const Triplet& gold : dev)
    ++ranks[filtered ? filtered_rank(p, gold, filter) : raw_rank(p, gold)];
  double reciprocal = 0.0;
  std::size_t at1 = 0, at3 = 0, at10 = 0;
  for (const auto& [rank, count] : ranks) {
    reciprocal += static_cast<double>(count) / static_cast<double>(rank);
    if (rank <= 1) at1 += count;
    if (rank <= 3) at3 += count;
    if (rank <= 10) at10 += count;
  }
  const double n = static_cast<double>(dev.size());
  RankingMetrics m;
  m.count = dev.size();
  m.mrr = 100.0 * reciprocal / n;
  m.hits[1] = 100.0 * static_cast<double>(at1) / n;
  m.hits[3] = 100.0 * static_cast<double>(at3) / n;
  m.hits[10] = 100.0 * static_cast<double>(at10) / n;
  return m;
}

std::string RankingMetrics::to_json() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"mrr\":%.4f,\"hits1\":%.4f,\"hits3\":%.4f,\"hits10\":%.4f,\"count\":%zu}", mrr,
                hits.count(1) ? hits.at(1) : 0.0, hits.count(3) ? hits.at(3) : 0.0,
                hits.count(10) ? hits.at(10) : 0.0, count);
  return buf;
}

}  // namespace kbcab
