#include "kbcab/abduction.hpp"

#include <cstdio>
#include <map>
#include <ostream>

#include "kbcab/error.hpp"
#include "kbcab/kgraph.hpp"

namespace kbcab {

std::string Axiom::to_string() const {
  return "forall x. " + antecedent + "(x) -> " + (negated ? "~" : "") + consequent + "(x)";
}

std::optional<Axiom> compile_axiom(const ScoredTriplet& t) {
  Axiom a;
  a.provenance = t;
  switch (t.r) {
    case Relation::synonym:
    case Relation::hypernym:
    case Relation::derivationally_related:
      a.antecedent = t.s;
      a.consequent = t.o;
      break;
    case Relation::antonym:
      a.antecedent = t.s;
      a.consequent = t.o;
      a.negated = true;
      break;
    case Relation::hyponym:
      a.antecedent = t.o;
      a.consequent = t.s;
      break;
  }
  if (a.antecedent == a.consequent) return std::nullopt;
  return a;
}

std::vector<Axiom> generate_axioms(std::span<const ScoredTriplet> scored, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("theta must lie in [0, 1]");
  std::vector<Axiom> out;
  std::map<std::tuple<std::string, std::string, bool>, std::size_t> position;
  for (const ScoredTriplet& t : scored) {
    if (!(t.score >= theta)) continue;
    auto axiom = compile_axiom(t);
    if (!axiom) continue;
    auto [it, inserted] = position.try_emplace(
        std::tuple{axiom->antecedent, axiom->consequent, axiom->negated}, out.size());
    if (inserted)
      out.push_back(std::move(*axiom));
    else if (t.score > out[it->second].provenance.score)
      out[it->second].provenance = t;
  }
  return out;
}

std::vector<ScoredTriplet> score_pairs(const TripletScorer& scorer,
                                       std::span<const CandidatePair> pairs) {
  std::vector<ScoredTriplet> out;
  out.reserve(pairs.size() * kAllRelations.size() * 2);
  for (const CandidatePair& p : pairs) {
    for (Relation r : kAllRelations) {
      out.push_back(scorer.score(p.context_pred, r, p.goal_pred));
      out.push_back(scorer.score(p.goal_pred, r, p.context_pred));
    }
  }
  return out;
}

std::vector<Axiom> TripletScorer::abduce(std::span<const CandidatePair> pairs,
                                         double theta) const {
  auto scored = score_pairs(*this, pairs);
  return generate_axioms(scored, theta);
}

KbcScorer::KbcScorer(std::shared_ptr<const ModelParams> params) : params_(std::move(params)) {
  if (!params_) throw ArgumentError("KbcScorer needs model parameters");
}

ScoredTriplet KbcScorer::score(std::string_view s, Relation r, std::string_view o) const {
  ScoredTriplet out{std::string(s), r, std::string(o), 0.0, false};
  auto sid = params_->vocab.entity_id(s);
  auto oid = params_->vocab.entity_id(o);
  if (!sid || !oid) {
    out.out_of_vocabulary = true;
    return out;
  }
  out.score = kbcab::score(*params_, *sid, static_cast<RelationId>(r), *oid);
  return out;
}

SearchScorer::SearchScorer(const TripletStore& store, const Vocabulary& vocab) : vocab_(vocab) {
  std::vector<NodeEdge> hyper, hypo;
  for (const Triplet& t : store.triplets()) {
    if (t.r == static_cast<RelationId>(Relation::hypernym))
      hyper.emplace_back(t.s, t.o);
    else if (t.r == static_cast<RelationId>(Relation::hyponym))
      hypo.emplace_back(t.s, t.o);
    else
      facts_.insert(t);
    if (t.r == static_cast<RelationId>(Relation::synonym)) facts_.insert({t.o, t.r, t.s});
  }
  for (auto [edges, rel] : {std::pair{&hyper, Relation::hypernym}, std::pair{&hypo, Relation::hyponym}}) {
    for (const auto& [a, b] : transitive_closure(*edges))
      facts_.insert({static_cast<EntityId>(a), static_cast<RelationId>(rel), static_cast<EntityId>(b)});
  }
}

ScoredTriplet SearchScorer::score(std::string_view s, Relation r, std::string_view o) const {
  ScoredTriplet out{std::string(s), r, std::string(o), 0.0, false};
  auto sid = vocab_.entity_id(s);
  auto oid = vocab_.entity_id(o);
  if (!sid || !oid) {
    out.out_of_vocabulary = true;
    return out;
  }
  out.score = facts_.contains({*sid, static_cast<RelationId>(r), *oid}) ? 1.0 : 0.0;
  return out;
}

SearchScorer search_closure_prepare(const TripletStore& store, const Vocabulary& vocab) {
  return SearchScorer(store, vocab);
}

void write_scored_tsv(std::ostream& out, std::span<const ScoredTriplet> scored) {
  char buf[32];
  for (const auto& t : scored) {
    std::snprintf(buf, sizeof buf, "%.6f", t.score);
    out << t.s << '\t' << relation_name(t.r) << '\t' << t.o << '\t' << buf << '\n';
  }
}

}  // namespace kbcab
