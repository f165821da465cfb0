#include "kbcab/prover.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include "kbcab/error.hpp"

namespace kbcab {

namespace {

void check_deadline(Clock::time_point deadline) {
  if (Clock::now() >= deadline) throw ProofTimeout();
}

// Union-find over variable binder ids with optional constant values.
class Unifier {
 public:
  int root(int v) {
    auto it = parent_.find(v);
    if (it == parent_.end() || it->second == v) return v;
    const int r = root(it->second);
    parent_[v] = r;
    return r;
  }
  bool bind_const(int v, int c) {
    const int r = root(v);
    auto [it, inserted] = value_.try_emplace(r, c);
    return inserted || it->second == c;
  }
  bool bind_vars(int a, int b) {
    const int ra = root(a), rb = root(b);
    if (ra == rb) return true;
    auto va = value_.find(ra), vb = value_.find(rb);
    if (va != value_.end() && vb != value_.end() && va->second != vb->second) return false;
    parent_[ra] = rb;
    if (va != value_.end()) {
      value_[rb] = va->second;
      value_.erase(ra);
    }
    return true;
  }
  std::optional<int> value(int v) {
    auto it = value_.find(root(v));
    if (it == value_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<int, int> parent_;
  std::map<int, int> value_;
};

void flatten_goal(const Formula& f, std::vector<GoalLiteral>& out) {
  switch (f.kind) {
    case Formula::Kind::exists:
      flatten_goal(f.children[0], out);
      return;
    case Formula::Kind::conjunction:
      flatten_goal(f.children[0], out);
      flatten_goal(f.children[1], out);
      return;
    case Formula::Kind::predicate:
      out.push_back({f.name, f.args, false});
      return;
    case Formula::Kind::negation:
      if (f.children[0].kind == Formula::Kind::predicate) {
        out.push_back({f.children[0].name, f.children[0].args, true});
        return;
      }
      throw UnsupportedFragment("negation of a compound formula: " + f.to_string());
    case Formula::Kind::implication:
      throw UnsupportedFragment("implication outside an axiom: " + f.to_string());
    case Formula::Kind::forall:
      throw UnsupportedFragment("universal quantifier outside an axiom: " + f.to_string());
  }
}

void collect_constants(const Formula& f, std::set<std::string>& out) {
  for (const Term& t : f.args)
    if (!t.is_variable()) out.insert(t.name);
  for (const Formula& c : f.children) collect_constants(c, out);
}

void collect_arities(const Formula& f, std::map<std::string, std::size_t>& arity,
                     const std::string& where) {
  if (f.kind == Formula::Kind::predicate) {
    auto [it, inserted] = arity.try_emplace(f.name, f.args.size());
    if (!inserted && it->second != f.args.size())
      throw FormatError(where + ": arity conflict for '" + f.name + "'");
  }
  for (const Formula& c : f.children) collect_arities(c, arity, where);
}

}  // namespace

std::string Literal::to_string() const {
  std::string s = (negated ? "~" : "") + pred + "(";
  for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i];
  return s + ")";
}

std::string SkolemNamer::fresh() {
  while (true) {
    std::string name = "_sk" + std::to_string(next_++);
    if (!reserved_.contains(name)) return name;
  }
}

std::vector<Literal> assume(const Formula& premise, SkolemNamer& namer) {
  std::vector<GoalLiteral> flat;
  flatten_goal(premise, flat);
  std::map<int, std::string> skolem;
  std::vector<Literal> out;
  out.reserve(flat.size());
  for (const GoalLiteral& g : flat) {
    Literal lit{g.pred, {}, g.negated};
    for (const Term& t : g.args) {
      if (!t.is_variable()) {
        lit.args.push_back(t.name);
        continue;
      }
      auto it = skolem.find(t.binder);
      if (it == skolem.end()) it = skolem.emplace(t.binder, namer.fresh()).first;
      lit.args.push_back(it->second);
    }
    out.push_back(std::move(lit));
  }
  return out;
}

std::optional<Axiom> axiom_from_formula(const Formula& f) {
  if (f.kind != Formula::Kind::forall || f.vars.size() != 1) return std::nullopt;
  const Formula& body = f.children[0];
  if (body.kind != Formula::Kind::implication) return std::nullopt;
  const Term& x = f.vars[0];
  auto unary_on_x = [&](const Formula& a) {
    return a.kind == Formula::Kind::predicate && a.args.size() == 1 && a.args[0] == x;
  };
  const Formula& lhs = body.children[0];
  const Formula* rhs = &body.children[1];
  bool negated = false;
  if (rhs->kind == Formula::Kind::negation) {
    negated = true;
    rhs = &rhs->children[0];
  }
  if (!unary_on_x(lhs) || !unary_on_x(*rhs) || lhs.name == rhs->name) return std::nullopt;
  Axiom a;
  a.antecedent = lhs.name;
  a.consequent = rhs->name;
  a.negated = negated;
  return a;
}

Goal Goal::from_formula(const Formula& f) {
  Goal g;
  flatten_goal(f, g.literals);
  return g;
}

// ---- ProofState -------------------------------------------------------------

void ProofState::set_goal(Goal goal, ProofMode mode) {
  goal_ = std::move(goal);
  mode_ = mode;
  components_.clear();
  component_proved_.clear();
  proof_facts_.clear();
  substitution_.clear();
}

int ProofState::pred_id(const std::string& name) {
  auto [it, inserted] = pred_ids_.try_emplace(name, static_cast<int>(pred_names_.size()));
  if (inserted) {
    pred_names_.push_back(name);
    pred_arity_.push_back(0);
  }
  return it->second;
}

int ProofState::const_id(const std::string& name) {
  auto [it, inserted] = const_ids_.try_emplace(name, static_cast<int>(const_names_.size()));
  if (inserted) const_names_.push_back(name);
  return it->second;
}

std::uint64_t ProofState::key(int pred, bool neg, int a0, int a1) {
  constexpr std::uint64_t kMask = (1u << 21) - 1;
  if (static_cast<std::uint64_t>(pred) > kMask || static_cast<std::uint64_t>(a0) > kMask ||
      static_cast<std::uint64_t>(a1 + 1) > kMask)
    throw ArgumentError("proof state too large");
  return (static_cast<std::uint64_t>(pred) << 43) | (static_cast<std::uint64_t>(neg) << 42) |
         (static_cast<std::uint64_t>(a0) << 21) | static_cast<std::uint64_t>(a1 + 1);
}

int ProofState::find(int pred, bool neg, int a0, int a1) const {
  auto it = fact_index_.find(key(pred, neg, a0, a1));
  return it == fact_index_.end() ? -1 : it->second;
}

int ProofState::insert_fact(const Fact& f) {
  const std::uint64_t k = key(f.pred, f.negated, f.a0, f.a1);
  auto it = fact_index_.find(k);
  if (it != fact_index_.end()) return -1;
  const int id = static_cast<int>(facts_.size());
  facts_.push_back(f);
  fact_index_.emplace(k, id);
  by_pred_[static_cast<std::uint64_t>(f.pred) * 2 + f.negated].push_back(id);
  return id;
}

void ProofState::add_literal(const Literal& lit) {
  if (lit.args.empty() || lit.args.size() > 2)
    throw UnsupportedFragment("literal arity must be 1 or 2: " + lit.to_string());
  const int p = pred_id(lit.pred);
  const int a0 = const_id(lit.args[0]);
  const int a1 = lit.args.size() == 2 ? const_id(lit.args[1]) : -1;
  insert_fact({p, lit.negated, a0, a1, -1, -1});
  saturate();
}

std::size_t ProofState::add_axioms(std::span<const Axiom> axioms, bool injected) {
  std::size_t added = 0;
  for (const Axiom& a : axioms) {
    if (a.antecedent == a.consequent) continue;
    if (!axiom_keys_.insert({a.antecedent, a.consequent, a.negated}).second) continue;
    const int index = static_cast<int>(axioms_.size());
    axioms_.push_back(a);
    injected_.push_back(injected);
    const int ante = pred_id(a.antecedent);
    const Consequence c{pred_id(a.consequent), a.negated, index};
    rules_[ante].push_back(c);
    ++added;
    // facts already processed by saturate() have not seen this rule
    auto it = by_pred_.find(static_cast<std::uint64_t>(ante) * 2);
    if (it == by_pred_.end()) continue;
    const std::vector<int> sources = it->second;
    for (int fi : sources) {
      if (static_cast<std::size_t>(fi) >= saturated_upto_) continue;
      const Fact f = facts_[static_cast<std::size_t>(fi)];
      if (f.a1 != -1) continue;
      insert_fact({c.pred, c.negated, f.a0, -1, fi, c.axiom});
    }
  }
  saturate();
  return added;
}

void ProofState::saturate() {
  while (saturated_upto_ < facts_.size()) {
    const int fi = static_cast<int>(saturated_upto_++);
    const Fact f = facts_[static_cast<std::size_t>(fi)];
    if (f.negated || f.a1 != -1) continue;
    auto it = rules_.find(f.pred);
    if (it == rules_.end()) continue;
    const std::vector<Consequence> rules = it->second;
    for (const Consequence& c : rules) insert_fact({c.pred, c.negated, f.a0, -1, fi, c.axiom});
  }
}

void ProofState::collect_axioms(int fact, std::set<int>& out) const {
  while (fact >= 0) {
    const Fact& f = facts_[static_cast<std::size_t>(fact)];
    if (f.axiom >= 0) out.insert(f.axiom);
    fact = f.parent;
  }
}

bool ProofState::prove(Clock::time_point deadline) {
  proof_facts_.clear();
  clash_axioms_.clear();
  substitution_.clear();
  check_deadline(deadline);
  return mode_ == ProofMode::entailment ? prove_entailment(deadline)
                                        : prove_contradiction(deadline);
}

bool ProofState::prove_entailment(Clock::time_point deadline) {
  const auto& lits = goal_.literals;
  const std::size_t n = lits.size();

  // components: goal literals connected through shared variables
  std::vector<std::size_t> comp(n);
  std::iota(comp.begin(), comp.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
    return comp[i] == i ? i : comp[i] = root(comp[i]);
  };
  std::map<int, std::size_t> first_use;
  for (std::size_t i = 0; i < n; ++i) {
    for (const Term& t : lits[i].args) {
      if (!t.is_variable()) continue;
      auto [it, inserted] = first_use.try_emplace(t.binder, i);
      if (!inserted) comp[root(i)] = root(it->second);
    }
  }
  std::map<std::size_t, std::size_t> comp_index;
  components_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = comp_index.try_emplace(root(i), components_.size());
    if (inserted) components_.emplace_back();
    components_[it->second].push_back(i);
  }
  component_proved_.assign(components_.size(), false);

  // resolve goal symbols once
  struct Resolved {
    std::uint64_t bucket;
    std::vector<int> arg_const;   // -1 for variables
    std::vector<int> arg_binder;  // -1 for constants
  };
  std::vector<Resolved> resolved(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = pred_id(lits[i].pred);
    resolved[i].bucket = static_cast<std::uint64_t>(p) * 2 + lits[i].negated;
    for (const Term& t : lits[i].args) {
      resolved[i].arg_const.push_back(t.is_variable() ? -1 : const_id(t.name));
      resolved[i].arg_binder.push_back(t.is_variable() ? t.binder : -1);
    }
  }
  auto candidates = [&](std::size_t i) -> const std::vector<int>* {
    auto it = by_pred_.find(resolved[i].bucket);
    return it == by_pred_.end() ? nullptr : &it->second;
  };

  std::map<int, int> binding;  // binder -> constant
  std::map<int, std::string> binder_names;
  for (const auto& l : lits)
    for (const Term& t : l.args)
      if (t.is_variable()) binder_names[t.binder] = t.name;

  std::uint64_t steps = 0;
  bool all = true;
  std::vector<int> chosen;
  for (std::size_t c = 0; c < components_.size(); ++c) {
    std::vector<std::size_t> todo = components_[c];
    std::vector<std::size_t> order;
    std::set<int> bound;
    // greedy order: most already-bound variables first, then fewest candidates
    while (!todo.empty()) {
      auto best = std::min_element(todo.begin(), todo.end(), [&](std::size_t a, std::size_t b) {
        auto bound_count = [&](std::size_t i) {
          int k = 0;
          for (int v : resolved[i].arg_binder) k += v >= 0 && bound.contains(v);
          return k;
        };
        auto cand_count = [&](std::size_t i) {
          auto* cs = candidates(i);
          return cs ? cs->size() : std::size_t{0};
        };
        return std::pair{-bound_count(a), cand_count(a)} < std::pair{-bound_count(b), cand_count(b)};
      });
      for (int v : resolved[*best].arg_binder)
        if (v >= 0) bound.insert(v);
      order.push_back(*best);
      todo.erase(best);
    }

    std::vector<int> picked(order.size(), -1);
    std::function<bool(std::size_t)> match = [&](std::size_t k) -> bool {
      if (k == order.size()) return true;
      const Resolved& r = resolved[order[k]];
      const auto* cs = candidates(order[k]);
      if (!cs) return false;
      for (int fi : *cs) {
        if ((++steps & 0x3ff) == 0) check_deadline(deadline);
        const Fact& f = facts_[static_cast<std::size_t>(fi)];
        const int fact_args[2] = {f.a0, f.a1};
        if ((f.a1 == -1) != (r.arg_const.size() == 1)) continue;
        std::vector<int> newly;
        bool ok = true;
        for (std::size_t j = 0; j < r.arg_const.size() && ok; ++j) {
          const int value = fact_args[j];
          if (r.arg_const[j] >= 0) {
            ok = r.arg_const[j] == value;
          } else {
            auto [it, inserted] = binding.try_emplace(r.arg_binder[j], value);
            if (inserted)
              newly.push_back(r.arg_binder[j]);
            else
              ok = it->second == value;
          }
        }
        if (ok) {
          picked[k] = fi;
          if (match(k + 1)) return true;
        }
        for (int v : newly) binding.erase(v);
      }
      return false;
    };
    if (match(0)) {
      component_proved_[c] = true;
      chosen.insert(chosen.end(), picked.begin(), picked.end());
    } else {
      all = false;
    }
  }
  if (!all) return false;
  proof_facts_ = std::move(chosen);
  for (const auto& [binder, value] : binding)
    substitution_.emplace_back(binder_names[binder], const_names_[static_cast<std::size_t>(value)]);
  return true;
}

bool ProofState::prove_contradiction(Clock::time_point deadline) {
  // context alone inconsistent
  for (std::size_t i = 0; i < facts_.size(); ++i) {
    const Fact& f = facts_[i];
    const int other = find(f.pred, !f.negated, f.a0, f.a1);
    if (other >= 0) {
      proof_facts_ = {static_cast<int>(i), other};
      return true;
    }
  }

  // Literals each hypothesis literal contributes after saturation: itself and,
  // for a positive unary literal, every consequence reachable through the rules.
  struct Derived {
    int pred;
    bool negated;
    std::size_t literal;
  };
  const auto& lits = goal_.literals;
  std::vector<std::vector<Derived>> derived(lits.size());
  for (std::size_t i = 0; i < lits.size(); ++i) {
    const int p = pred_id(lits[i].pred);
    for (const Term& t : lits[i].args)
      if (!t.is_variable()) const_id(t.name);
    derived[i].push_back({p, lits[i].negated, i});
    if (lits[i].negated || lits[i].args.size() != 1) continue;
    std::set<std::pair<int, bool>> seen{{p, false}};
    std::vector<int> frontier{p};
    while (!frontier.empty()) {
      const int q = frontier.back();
      frontier.pop_back();
      auto it = rules_.find(q);
      if (it == rules_.end()) continue;
      for (const Consequence& c : it->second) {
        if (!seen.insert({c.pred, c.negated}).second) continue;
        derived[i].push_back({c.pred, c.negated, i});
        if (!c.negated) frontier.push_back(c.pred);
      }
    }
  }

  // try a candidate identification: confirm by saturating context + sigma(H)
  auto confirm = [&](Unifier& u) -> bool {
    ProofState trial = *this;
    trial.set_goal({}, ProofMode::entailment);
    int counter = 0;
    std::map<int, std::string> fresh;  // root binder -> witness name
    auto witness = [&](const Term& t) -> std::string {
      if (!t.is_variable()) return t.name;
      if (auto v = u.value(t.binder)) return const_names_[static_cast<std::size_t>(*v)];
      const int r = u.root(t.binder);
      auto it = fresh.find(r);
      if (it != fresh.end()) return it->second;
      std::string name;
      do name = "_sk" + std::to_string(counter++);
      while (trial.const_ids_.contains(name));
      trial.const_id(name);
      return fresh.emplace(r, name).first->second;
    };
    for (const GoalLiteral& g : lits) {
      Literal lit{g.pred, {}, g.negated};
      for (const Term& t : g.args) lit.args.push_back(witness(t));
      trial.add_literal(lit);
    }
    for (std::size_t i = 0; i < trial.facts_.size(); ++i) {
      const Fact& f = trial.facts_[i];
      const int other = trial.find(f.pred, !f.negated, f.a0, f.a1);
      if (other < 0) continue;
      std::set<int> used;
      trial.collect_axioms(static_cast<int>(i), used);
      trial.collect_axioms(other, used);
      clash_axioms_ = std::move(used);
      substitution_.clear();
      std::set<std::pair<std::string, std::string>> seen;
      for (const GoalLiteral& g : lits)
        for (const Term& t : g.args)
          if (t.is_variable() && seen.insert({t.name, witness(t)}).second)
            substitution_.emplace_back(t.name, witness(t));
      return true;
    }
    return false;
  };

  auto unify_with_fact = [&](const GoalLiteral& g, const Fact& f, Unifier& u) {
    const int fact_args[2] = {f.a0, f.a1};
    if ((f.a1 == -1) != (g.args.size() == 1)) return false;
    for (std::size_t j = 0; j < g.args.size(); ++j) {
      const Term& t = g.args[j];
      if (t.is_variable()) {
        if (!u.bind_const(t.binder, fact_args[j])) return false;
      } else if (const_ids_.at(t.name) != fact_args[j]) {
        return false;
      }
    }
    return true;
  };
  auto unify_terms = [&](const Term& a, const Term& b, Unifier& u) {
    if (a.is_variable() && b.is_variable()) return u.bind_vars(a.binder, b.binder);
    if (a.is_variable()) return u.bind_const(a.binder, const_ids_.at(b.name));
    if (b.is_variable()) return u.bind_const(b.binder, const_ids_.at(a.name));
    return a.name == b.name;
  };

  std::uint64_t steps = 0;
  // a derived literal clashing with the context
  for (std::size_t i = 0; i < lits.size(); ++i) {
    for (const Derived& d : derived[i]) {
      auto it = by_pred_.find(static_cast<std::uint64_t>(d.pred) * 2 + !d.negated);
      if (it == by_pred_.end()) continue;
      for (int fi : it->second) {
        if ((++steps & 0xff) == 0) check_deadline(deadline);
        Unifier u;
        if (unify_with_fact(lits[i], facts_[static_cast<std::size_t>(fi)], u) && confirm(u))
          return true;
      }
    }
  }
  // two hypothesis-derived literals clashing with each other
  for (std::size_t i = 0; i < lits.size(); ++i) {
    for (std::size_t j = i; j < lits.size(); ++j) {
      for (const Derived& d : derived[i]) {
        for (const Derived& e : derived[j]) {
          if (d.pred != e.pred || d.negated == e.negated) continue;
          if (lits[i].args.size() != lits[j].args.size()) continue;
          if ((++steps & 0xff) == 0) check_deadline(deadline);
          Unifier u;
          bool ok = true;
          for (std::size_t k = 0; k < lits[i].args.size() && ok; ++k)
            ok = unify_terms(lits[i].args[k], lits[j].args[k], u);
          if (ok && confirm(u)) return true;
        }
      }
    }
  }
  return false;
}

std::vector<std::string> ProofState::open_goal_predicates() const {
  std::set<std::string> out;
  auto add = [&](std::size_t i) {
    if (goal_.literals[i].args.size() == 1) out.insert(goal_.literals[i].pred);
  };
  if (mode_ == ProofMode::entailment && !components_.empty()) {
    for (std::size_t c = 0; c < components_.size(); ++c)
      if (!component_proved_[c])
        for (std::size_t i : components_[c]) add(i);
  } else {
    for (std::size_t i = 0; i < goal_.literals.size(); ++i) add(i);
  }
  return {out.begin(), out.end()};
}

std::vector<std::string> ProofState::context_predicates(bool unary_only) const {
  std::set<std::string> out;
  for (const Fact& f : facts_)
    if (!unary_only || f.a1 == -1) out.insert(pred_names_[static_cast<std::size_t>(f.pred)]);
  return {out.begin(), out.end()};
}

bool ProofState::axiom_connects(const std::string& a, const std::string& b) const {
  for (bool neg : {false, true})
    if (axiom_keys_.contains({a, b, neg}) || axiom_keys_.contains({b, a, neg})) return true;
  return false;
}

void ProofState::mark_queried(std::span<const CandidatePair> pairs) {
  queried_.insert(pairs.begin(), pairs.end());
}

std::vector<Axiom> ProofState::used_injected_axioms() const {
  std::set<int> used = clash_axioms_;
  for (int fi : proof_facts_) collect_axioms(fi, used);
  std::vector<Axiom> out;
  for (int a : used)
    if (injected_[static_cast<std::size_t>(a)]) out.push_back(axioms_[static_cast<std::size_t>(a)]);
  return out;
}

std::vector<Literal> ProofState::derived_literals() const {
  std::vector<Literal> out;
  out.reserve(facts_.size());
  for (const Fact& f : facts_) {
    Literal lit{pred_names_[static_cast<std::size_t>(f.pred)], {const_names_[static_cast<std::size_t>(f.a0)]}, f.negated};
    if (f.a1 >= 0) lit.args.push_back(const_names_[static_cast<std::size_t>(f.a1)]);
    out.push_back(std::move(lit));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool ProofState::holds(const Literal& lit) const {
  auto p = pred_ids_.find(lit.pred);
  if (p == pred_ids_.end() || lit.args.empty() || lit.args.size() > 2) return false;
  auto a0 = const_ids_.find(lit.args[0]);
  if (a0 == const_ids_.end()) return false;
  int a1 = -1;
  if (lit.args.size() == 2) {
    auto it = const_ids_.find(lit.args[1]);
    if (it == const_ids_.end()) return false;
    a1 = it->second;
  }
  return find(p->second, lit.negated, a0->second, a1) >= 0;
}

// ---- configuration, problems, decide ---------------------------------------

void ProveConfig::validate() const {
  if (timeout_ms <= 0) throw ArgumentError("timeout must be > 0 ms");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("theta must lie in [0, 1]");
  if (max_abduction_rounds < 0) throw ArgumentError("abduction rounds must be >= 0");
}

std::vector<CandidatePair> collect_pairs(const ProofState& state, const ProveConfig& cfg) {
  std::vector<CandidatePair> out;
  const auto context = state.context_predicates(true);
  const auto goal = state.open_goal_predicates();
  for (const auto& c : context) {
    if (cfg.role_predicates.contains(c)) continue;
    for (const auto& g : goal) {
      if (c == g || cfg.role_predicates.contains(g)) continue;
      if (state.axiom_connects(c, g)) continue;
      CandidatePair pair{c, g};
      if (state.was_queried(pair)) continue;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

std::string_view label_name(Label l) {
  switch (l) {
    case Label::entailment: return "entailment";
    case Label::contradiction: return "contradiction";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view s) {
  for (Label l : {Label::entailment, Label::contradiction, Label::unknown})
    if (label_name(l) == s) return l;
  return std::nullopt;
}

void RteProblem::validate() const {
  if (premises.empty()) throw FormatError(id + ": problem has no premises");
  std::map<std::string, std::size_t> arity;
  for (const Formula& p : premises) collect_arities(p, arity, id);
  collect_arities(hypothesis, arity, id);
}

namespace {

// One proof direction with up to `rounds` abduction rounds. New axioms are
// added to the live state; the attempt resumes from the saturated context.
bool attempt(ProofState& state, const Scorer& scorer, const ProveConfig& cfg,
             Clock::time_point deadline, Decision& decision) {
  for (int round = 0;; ++round) {
    if (state.prove(deadline)) return true;
    if (round >= cfg.max_abduction_rounds) return false;
    auto pairs = collect_pairs(state, cfg);
    if (pairs.empty()) return false;
    std::vector<Axiom> axioms;
    try {
      axioms = scorer.abduce(pairs, cfg.theta);
    } catch (const RemoteScorerError& e) {
      decision.warnings.push_back(std::string("scorer unavailable, no axioms injected: ") + e.what());
      return false;
    }
    check_deadline(deadline);
    state.mark_queried(pairs);
    std::vector<Axiom> fresh;
    for (const Axiom& a : axioms)
      if (!state.has_axiom(a)) fresh.push_back(a);
    if (state.add_axioms(fresh, true) == 0) return false;
    decision.injected.insert(decision.injected.end(), fresh.begin(), fresh.end());
  }
}

}  // namespace

Decision decide(const RteProblem& problem, const Scorer& scorer, const ProveConfig& cfg) {
  cfg.validate();
  const auto deadline = Clock::now() + std::chrono::milliseconds(cfg.timeout_ms);
  Decision decision;
  try {
    std::set<std::string> constants;
    for (const Formula& p : problem.premises) collect_constants(p, constants);
    collect_constants(problem.hypothesis, constants);
    SkolemNamer namer(std::move(constants));

    ProofState state;
    std::vector<Axiom> given;
    for (const Formula& premise : problem.premises) {
      if (auto axiom = axiom_from_formula(premise)) {
        given.push_back(std::move(*axiom));
        continue;
      }
      for (const Literal& lit : assume(premise, namer)) state.add_literal(lit);
    }
    state.add_axioms(given, false);
    Goal goal = Goal::from_formula(problem.hypothesis);

    state.set_goal(goal, ProofMode::entailment);
    if (attempt(state, scorer, cfg, deadline, decision)) {
      decision.label = Label::entailment;
      decision.axioms_used = state.used_injected_axioms();
      return decision;
    }
    decision.entailment_injected = decision.injected.size();
    state.set_goal(std::move(goal), ProofMode::contradiction);
    if (attempt(state, scorer, cfg, deadline, decision)) {
      decision.label = Label::contradiction;
      decision.axioms_used = state.used_injected_axioms();
      return decision;
    }
  } catch (const ProofTimeout&) {
    decision = Decision{};
    decision.timed_out = true;
  } catch (const UnsupportedFragment& e) {
    decision.label = Label::unknown;
    decision.error = e.what();
  }
  decision.label = Label::unknown;
  decision.axioms_used.clear();
  return decision;
}

}  // namespace kbcab
