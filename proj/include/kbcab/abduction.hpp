#pragma once

#include <compare>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kbcab/complex_model.hpp"
#include "kbcab/relation.hpp"
#include "kbcab/triplet_store.hpp"

namespace kbcab {

struct CandidatePair {
  std::string context_pred;
  std::string goal_pred;

  auto operator<=>(const CandidatePair&) const = default;
};

struct ScoredTriplet {
  std::string s;
  Relation r = Relation::synonym;
  std::string o;
  double score = 0.0;
  bool out_of_vocabulary = false;

  bool operator==(const ScoredTriplet&) const = default;
};

// forall x. antecedent(x) -> [~] consequent(x)
struct Axiom {
  std::string antecedent;
  std::string consequent;
  bool negated = false;
  ScoredTriplet provenance;

  auto key() const { return std::tie(antecedent, consequent, negated); }
  // "forall x. parent(x) -> ~child(x)"
  std::string to_string() const;
};

// Table of triplet-to-axiom rules: synonym, hypernym and derivationally-related
// give s -> o, antonym gives s -> ~o, hyponym gives o -> s. Returns nullopt
// when the implication would be reflexive.
std::optional<Axiom> compile_axiom(const ScoredTriplet& t);

// Keeps triplets with score >= theta, compiles them, and merges duplicates
// (same antecedent, consequent, polarity) keeping the highest-scoring
// provenance. Output follows first appearance in `scored`.
std::vector<Axiom> generate_axioms(std::span<const ScoredTriplet> scored, double theta);

// Anything that can turn predicate pairs into axioms.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<Axiom> abduce(std::span<const CandidatePair> pairs, double theta) const = 0;
  virtual std::string describe() const = 0;
};

// Never proposes anything; the no-knowledge baseline.
class NullScorer final : public Scorer {
 public:
  std::vector<Axiom> abduce(std::span<const CandidatePair>, double) const override { return {}; }
  std::string describe() const override { return "none"; }
};

// A scorer that assigns a value in [0,1] to individual lemma triplets.
// Unknown lemmas score 0.0 with out_of_vocabulary set.
class TripletScorer : public Scorer {
 public:
  virtual ScoredTriplet score(std::string_view s, Relation r, std::string_view o) const = 0;
  std::vector<Axiom> abduce(std::span<const CandidatePair> pairs, double theta) const override;
};

// For every pair (a, b) and every core relation r, in that order, scores
// (a, r, b) and then (b, r, a): 10 results per pair.
std::vector<ScoredTriplet> score_pairs(const TripletScorer& scorer,
                                       std::span<const CandidatePair> pairs);

class KbcScorer final : public TripletScorer {
 public:
  explicit KbcScorer(std::shared_ptr<const ModelParams> params);

  ScoredTriplet score(std::string_view s, Relation r, std::string_view o) const override;
  std::string describe() const override { return "kbc"; }
  const ModelParams& params() const { return *params_; }

 private:
  std::shared_ptr<const ModelParams> params_;
};

// Database lookup with hypernym/hyponym transitive closures precomputed and
// synonym treated symmetrically. Scores are exactly 0.0 or 1.0.
class SearchScorer final : public TripletScorer {
 public:
  SearchScorer(const TripletStore& store, const Vocabulary& vocab);

  ScoredTriplet score(std::string_view s, Relation r, std::string_view o) const override;
  std::string describe() const override { return "search"; }
  std::size_t fact_count() const { return facts_.size(); }

 private:
  Vocabulary vocab_;
  std::set<Triplet> facts_;
};

SearchScorer search_closure_prepare(const TripletStore& store, const Vocabulary& vocab);

// `s<TAB>r<TAB>o<TAB>score` with 6-decimal scores.
void write_scored_tsv(std::ostream& out, std::span<const ScoredTriplet> scored);

}  // namespace kbcab
