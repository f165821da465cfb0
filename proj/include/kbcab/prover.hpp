#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kbcab/abduction.hpp"
#include "kbcab/formula.hpp"

namespace kbcab {

using Clock = std::chrono::steady_clock;

// Thrown internally when a proof attempt passes its deadline.
struct ProofTimeout : std::runtime_error {
  ProofTimeout() : std::runtime_error("proof deadline exceeded") {}
};

struct Literal {
  std::string pred;
  std::vector<std::string> args;
  bool negated = false;

  auto operator<=>(const Literal&) const = default;
  std::string to_string() const;
};

// Hands out `_sk0`, `_sk1`, ... skipping names that occur in the source.
class SkolemNamer {
 public:
  SkolemNamer() = default;
  explicit SkolemNamer(std::set<std::string> reserved) : reserved_(std::move(reserved)) {}
  std::string fresh();

 private:
  std::set<std::string> reserved_;
  int next_ = 0;
};

// Skolemizes an existentially closed conjunction of (possibly negated) atoms.
// Variables are named in order of first occurrence in the body. Throws
// UnsupportedFragment on implications, universals or negated compounds.
std::vector<Literal> assume(const Formula& premise, SkolemNamer& namer);

// Single-antecedent universal implication `forall x. a(x) -> [~]b(x)`, if the
// formula has that shape.
std::optional<Axiom> axiom_from_formula(const Formula& f);

// Hypothesis as a flat conjunction of literals over existential variables.
struct GoalLiteral {
  std::string pred;
  std::vector<Term> args;
  bool negated = false;
};

struct Goal {
  std::vector<GoalLiteral> literals;
  // Throws UnsupportedFragment outside the existential-conjunctive fragment.
  static Goal from_formula(const Formula& f);
};

enum class ProofMode { entailment, contradiction };

// Context literals saturated under the active unary axioms, plus the goal
// under proof. Saturation is incremental: axioms added later are applied to
// the existing context without rebuilding it.
class ProofState {
 public:
  ProofState() = default;
  explicit ProofState(Goal goal, ProofMode mode = ProofMode::entailment)
      : goal_(std::move(goal)), mode_(mode) {}

  void set_goal(Goal goal, ProofMode mode);
  const Goal& goal() const { return goal_; }
  ProofMode mode() const { return mode_; }

  void add_literal(const Literal& lit);
  // Returns how many axioms were new. `injected` marks abduced axioms.
  std::size_t add_axioms(std::span<const Axiom> axioms, bool injected);

  // Entailment mode: every goal literal matched under one substitution of the
  // goal variables into context constants. Contradiction mode: some
  // identification of goal variables with context constants (or fresh
  // witnesses) makes context + goal derive a clash p(t), ~p(t).
  bool prove(Clock::time_point deadline);

  // Predicates paired with the context during abduction: goal literals of
  // unproven components (entailment) or of the whole hypothesis (contradiction).
  std::vector<std::string> open_goal_predicates() const;
  std::vector<std::string> context_predicates(bool unary_only) const;

  bool axiom_connects(const std::string& a, const std::string& b) const;
  bool has_axiom(const Axiom& a) const {
    return axiom_keys_.contains({a.antecedent, a.consequent, a.negated});
  }
  void mark_queried(std::span<const CandidatePair> pairs);
  bool was_queried(const CandidatePair& p) const { return queried_.contains(p); }

  // Injected axioms that the last successful proof depended on.
  std::vector<Axiom> used_injected_axioms() const;
  const std::vector<Axiom>& axioms() const { return axioms_; }
  // Substitution found by the last successful proof (variable name -> constant).
  const std::vector<std::pair<std::string, std::string>>& substitution() const { return substitution_; }

  // Ground literals currently derivable (saturated context).
  std::vector<Literal> derived_literals() const;
  bool holds(const Literal& lit) const;

 private:
  struct Fact {
    int pred;
    bool negated;
    int a0, a1;     // constant ids; a1 = -1 for unary
    int parent;     // fact it was derived from, -1 for context literals
    int axiom;      // axiom used for the derivation, -1 for context literals
  };
  struct Consequence {
    int pred;
    bool negated;
    int axiom;
  };

  int pred_id(const std::string& name);
  int const_id(const std::string& name);
  static std::uint64_t key(int pred, bool neg, int a0, int a1);
  int find(int pred, bool neg, int a0, int a1) const;
  int insert_fact(const Fact& f);
  void saturate();
  void collect_axioms(int fact, std::set<int>& out) const;

  bool prove_entailment(Clock::time_point deadline);
  bool prove_contradiction(Clock::time_point deadline);

  Goal goal_;
  ProofMode mode_ = ProofMode::entailment;

  std::vector<std::string> pred_names_, const_names_;
  std::unordered_map<std::string, int> pred_ids_, const_ids_;
  std::vector<int> pred_arity_;

  std::vector<Fact> facts_;
  std::unordered_map<std::uint64_t, int> fact_index_;
  std::unordered_map<std::uint64_t, std::vector<int>> by_pred_;  // (pred, neg) -> facts
  std::size_t saturated_upto_ = 0;

  std::vector<Axiom> axioms_;
  std::vector<bool> injected_;
  std::set<std::tuple<std::string, std::string, bool>> axiom_keys_;
  std::unordered_map<int, std::vector<Consequence>> rules_;  // antecedent pred -> consequences

  std::set<CandidatePair> queried_;
  std::vector<bool> component_proved_;
  std::vector<std::vector<std::size_t>> components_;
  std::vector<int> proof_facts_;
  std::set<int> clash_axioms_;
  std::vector<std::pair<std::string, std::string>> substitution_;
};

struct ProveConfig {
  std::int64_t timeout_ms = 100000;
  double theta = 0.4;
  int max_abduction_rounds = 1;
  // Unary predicates never paired during abduction. Binary predicates are
  // always excluded.
  std::set<std::string> role_predicates;

  void validate() const;
};

// Context unary predicates x open goal predicates, minus identical names,
// role predicates, pairs already linked by an active axiom and pairs already
// sent to a scorer. Sorted.
std::vector<CandidatePair> collect_pairs(const ProofState& state, const ProveConfig& cfg);

enum class Label { entailment, contradiction, unknown };
std::string_view label_name(Label l);
std::optional<Label> parse_label(std::string_view s);

struct RteProblem {
  std::string id;
  std::vector<Formula> premises;
  Formula hypothesis;
  std::optional<Label> gold;

  // Throws FormatError on empty premises or predicate arity conflicts
  // across formulas.
  void validate() const;
};

struct Decision {
  Label label = Label::unknown;
  std::vector<Axiom> axioms_used;  // injected axioms the proof relied on
  std::vector<Axiom> injected;     // everything abduction added
  std::size_t entailment_injected = 0;  // prefix of `injected` from the entailment attempt
  bool timed_out = false;
  std::string error;               // unsupported fragment etc.
  std::vector<std::string> warnings;
};

// Entailment attempt (with abduction rounds), then contradiction attempt with
// the accumulated axioms; unknown otherwise or on timeout. Premises of the
// form `forall x. a(x) -> [~]b(x)` act as given axioms.
Decision decide(const RteProblem& problem, const Scorer& scorer, const ProveConfig& cfg);

}  // namespace kbcab
