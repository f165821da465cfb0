#pragma once
// Shared fixtures for unit and acceptance tests: planted models, a table
// scorer, random instance generators and brute-force oracles.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kbcab/abduction.hpp"
#include "kbcab/complex_model.hpp"
#include "kbcab/kgraph.hpp"
#include "kbcab/prover.hpp"
#include "kbcab/ranking_eval.hpp"

namespace kbtest {

using namespace kbcab;

// ---- planted ComplEx ---------------------------------------------------------

struct PlantedFact {
  std::string s;
  Relation r;
  std::string o;
};

// A model whose raw score is `strength - bias` on every listed fact and
// `-bias` on every other triplet between distinct entities. Dimension 0 is a
// bias; each unordered entity pair with facts gets its own dimension where
// one end is 1 and the other e^{i pi/4}, so the relation weight there can set
// both directions independently.
inline ModelParams planted_model(const std::vector<PlantedFact>& facts,
                                 const std::vector<std::string>& extra_entities = {},
                                 double bias = 3.0, double strength = 6.0) {
  Vocabulary vocab;
  for (const auto& f : facts) {
    vocab.intern_entity(f.s);
    vocab.intern_entity(f.o);
  }
  for (const auto& e : extra_entities) vocab.intern_entity(e);

  std::map<std::pair<EntityId, EntityId>, std::size_t> pair_dim;
  for (const auto& f : facts) {
    EntityId a = *vocab.entity_id(f.s), b = *vocab.entity_id(f.o);
    if (a > b) std::swap(a, b);
    pair_dim.emplace(std::pair{a, b}, 1 + pair_dim.size());
  }
  const std::size_t dim = 1 + pair_dim.size();
  ModelParams p;
  p.vocab = vocab;
  p.dim = dim;
  static_cast<EmbeddingTables&>(p) = EmbeddingTables(vocab.entity_count(), vocab.relation_count(), dim);

  for (std::size_t e = 0; e < vocab.entity_count(); ++e) p.entity_re(e, 0) = 1.0;
  for (std::size_t r = 0; r < vocab.relation_count(); ++r) p.relation_re(r, 0) = -bias;

  const double h = std::numbers::sqrt2 / 2;
  for (const auto& [ab, d] : pair_dim) {
    p.entity_re(static_cast<std::size_t>(ab.first), d) = 1.0;
    p.entity_re(static_cast<std::size_t>(ab.second), d) = h;
    p.entity_im(static_cast<std::size_t>(ab.second), d) = h;
  }
  // u: score of (first, r, second), v: score of (second, r, first)
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> uv;
  for (const auto& f : facts) {
    const EntityId s = *vocab.entity_id(f.s), o = *vocab.entity_id(f.o);
    const auto d = pair_dim.at({std::min(s, o), std::max(s, o)});
    auto& w = uv[{static_cast<std::size_t>(f.r), d}];
    (s < o ? w.first : w.second) = strength;
  }
  for (const auto& [rd, w] : uv) {
    const auto [u, v] = w;
    p.relation_re(rd.first, rd.second) = (u + v) / std::numbers::sqrt2;
    p.relation_im(rd.first, rd.second) = (u - v) / std::numbers::sqrt2;
  }
  return p;
}

// ---- table scorer ------------------------------------------------------------

class TableScorer final : public TripletScorer {
 public:
  void set(const std::string& s, Relation r, const std::string& o, double v) { table_[{s, r, o}] = v; }
  ScoredTriplet score(std::string_view s, Relation r, std::string_view o) const override {
    auto it = table_.find({std::string(s), r, std::string(o)});
    return {std::string(s), r, std::string(o), it == table_.end() ? 0.0 : it->second, false};
  }
  std::string describe() const override { return "table"; }

 private:
  std::map<std::tuple<std::string, Relation, std::string>, double> table_;
};

// ---- random models and graphs ------------------------------------------------

inline Vocabulary numbered_vocab(std::size_t entities) {
  Vocabulary v;
  for (std::size_t i = 0; i < entities; ++i) v.intern_entity("e" + std::to_string(i));
  return v;
}

inline ModelParams random_model(std::size_t entities, std::size_t dim, std::uint64_t seed) {
  return init_params(numbered_vocab(entities), dim, seed);
}

inline std::vector<NodeEdge> random_graph(std::mt19937_64& rng, std::size_t max_nodes) {
  std::uniform_int_distribution<std::size_t> nd(1, max_nodes);
  const std::size_t n = nd(rng);
  std::uniform_int_distribution<std::size_t> md(0, 2 * n);
  std::uniform_int_distribution<std::int64_t> node(0, static_cast<std::int64_t>(n) - 1);
  std::vector<NodeEdge> edges;
  for (std::size_t i = md(rng); i > 0; --i) edges.push_back({node(rng), node(rng)});
  return edges;
}

// Reachability by squaring the boolean adjacency matrix until it is stable.
// Diagonal entries only survive when they were input edges.
inline std::vector<NodeEdge> matrix_closure(const std::vector<NodeEdge>& edges) {
  std::vector<std::int64_t> nodes;
  for (auto [a, b] : edges) {
    nodes.push_back(a);
    nodes.push_back(b);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const std::size_t n = nodes.size();
  auto idx = [&](std::int64_t x) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), x) - nodes.begin());
  };
  std::vector<std::vector<bool>> m(n, std::vector<bool>(n));
  for (auto [a, b] : edges) m[idx(a)][idx(b)] = true;
  for (;;) {
    auto next = m;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (m[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (m[k][j]) next[i][j] = true;
    if (next == m) break;
    m = std::move(next);
  }
  std::set<NodeEdge> input(edges.begin(), edges.end());
  std::vector<NodeEdge> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m[i][j] && (i != j || input.contains({nodes[i], nodes[i]}))) out.push_back({nodes[i], nodes[j]});
  return out;
}

// ---- ranking oracle ----------------------------------------------------------

// Sort every surviving candidate by score and read off the gold position;
// ties are resolved in favour of the gold object.
inline std::size_t sort_rank(const ModelParams& p, const Triplet& gold, const FilterSet* filter) {
  std::vector<std::pair<double, int>> cands;  // (score, is_gold)
  for (EntityId o = 0; o < static_cast<EntityId>(p.entity_count()); ++o) {
    if (o != gold.o && filter && filter->contains(gold.s, gold.r, o)) continue;
    cands.push_back({score(p, gold.s, gold.r, o), o == gold.o ? 1 : 0});
  }
  std::sort(cands.begin(), cands.end(), [](auto x, auto y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second > y.second;
  });
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].second) return i + 1;
  return 0;
}

// ---- random RTE problems and the entailment oracle -------------------------

struct GLit {
  std::string pred;
  std::vector<std::string> args;  // variables "v*" or constants "_c*"
  bool negated = false;
};

struct GAxiom {
  std::string from, to;
  bool negated = false;
};

struct GenProblem {
  std::vector<GLit> premise;     // existentially closed over "x*" names
  std::vector<GLit> hypothesis;  // existentially closed over "y*" names
  std::vector<GAxiom> axioms;    // given as premise formulas

  static bool is_var(const std::string& t) { return t[0] != '_'; }

  static std::string conj_text(const std::vector<GLit>& lits) {
    std::set<std::string> vars;
    std::string body;
    for (const auto& l : lits) {
      if (!body.empty()) body += " & ";
      if (l.negated) body += "~";
      body += l.pred + "(";
      for (std::size_t i = 0; i < l.args.size(); ++i) {
        if (i) body += ", ";
        body += l.args[i];
        if (is_var(l.args[i])) vars.insert(l.args[i]);
      }
      body += ")";
    }
    if (vars.empty()) return body;
    std::string q = "exists";
    for (const auto& v : vars) q += " " + v;
    return q + ". " + body;
  }

  RteProblem to_problem(const std::string& id) const {
    RteProblem p;
    p.id = id;
    p.premises.push_back(parse_formula(conj_text(premise)));
    for (const auto& a : axioms)
      p.premises.push_back(
          parse_formula("forall z. " + a.from + "(z) -> " + (a.negated ? "~" : "") + a.to + "(z)"));
    p.hypothesis = parse_formula(conj_text(hypothesis));
    return p;
  }
};

struct GenLimits {
  int unary_preds = 5;
  int binary_preds = 2;
  int max_constants = 6;
  int max_literals = 12;
  int max_axioms = 5;
  int max_hyp_vars = 3;
};

inline GenProblem random_problem(std::mt19937_64& rng, const GenLimits& lim = {}) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  GenProblem g;

  const int n_consts = uni(1, lim.max_constants);
  const int n_named = uni(0, std::min(2, n_consts));
  std::vector<std::string> terms;
  for (int i = 0; i < n_consts; ++i) terms.push_back(i < n_named ? "_c" + std::to_string(i) : "x" + std::to_string(i));
  auto unary = [&] { return "p" + std::to_string(uni(0, lim.unary_preds - 1)); };
  auto binary = [&] { return "r" + std::to_string(uni(0, lim.binary_preds - 1)); };
  auto term = [&] { return terms[static_cast<std::size_t>(uni(0, n_consts - 1))]; };

  const int total = uni(2, lim.max_literals);
  const int n_prem = uni(1, total - 1);
  // every term appears at least once
  for (int i = 0; i < n_consts && static_cast<int>(g.premise.size()) < n_prem; ++i)
    g.premise.push_back({unary(), {terms[static_cast<std::size_t>(i)]}, coin(0.15)});
  while (static_cast<int>(g.premise.size()) < n_prem) {
    if (coin(0.3))
      g.premise.push_back({binary(), {term(), term()}, coin(0.1)});
    else
      g.premise.push_back({unary(), {term()}, coin(0.15)});
  }
  for (int i = uni(0, lim.max_axioms); i > 0; --i) {
    GAxiom a{unary(), unary(), coin(0.3)};
    if (a.from != a.to) g.axioms.push_back(a);
  }

  // hypothesis: often a generalized slice of the premise, sometimes random
  const int n_hyp = total - n_prem;
  std::map<std::string, std::string> gen;  // premise term -> hypothesis var
  auto hyp_term = [&](const std::string& t) -> std::string {
    if (!GenProblem::is_var(t) && coin(0.5)) return t;
    auto it = gen.find(t);
    if (it != gen.end()) return it->second;
    if (static_cast<int>(gen.size()) >= lim.max_hyp_vars) return gen.begin()->second;
    return gen[t] = "y" + std::to_string(gen.size());
  };
  const bool sliced = coin(0.6);
  for (int i = 0; i < n_hyp; ++i) {
    GLit lit;
    if (sliced) {
      lit = g.premise[static_cast<std::size_t>(uni(0, static_cast<int>(g.premise.size()) - 1))];
      if (!lit.negated && lit.args.size() == 1 && !g.axioms.empty() && coin(0.4)) {
        const GAxiom& a = g.axioms[static_cast<std::size_t>(uni(0, static_cast<int>(g.axioms.size()) - 1))];
        lit.pred = a.to;
        lit.negated = a.negated;
      }
      if (coin(0.1)) lit.negated = !lit.negated;
    } else {
      lit = coin(0.25) ? GLit{binary(), {term(), term()}, coin(0.1)} : GLit{unary(), {term()}, coin(0.2)};
    }
    for (auto& a : lit.args) a = hyp_term(a);
    g.hypothesis.push_back(lit);
  }
  return g;
}

using GroundLit = std::tuple<std::string, std::vector<std::string>, bool>;

// Closes a ground literal set under single-antecedent unary axioms.
inline std::set<GroundLit> saturate(std::set<GroundLit> facts, const std::vector<GAxiom>& axioms) {
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<GroundLit> add;
    for (const auto& [pred, args, neg] : facts) {
      if (neg || args.size() != 1) continue;
      for (const auto& a : axioms)
        if (a.from == pred) add.push_back({a.to, args, a.negated});
    }
    for (auto& f : add) changed |= facts.insert(std::move(f)).second;
  }
  return facts;
}

inline bool has_clash(const std::set<GroundLit>& facts) {
  for (const auto& [pred, args, neg] : facts)
    if (!neg && facts.contains({pred, args, true})) return true;
  return false;
}

inline std::vector<std::string> hyp_vars(const std::vector<GLit>& h) {
  std::set<std::string> vars;
  for (const auto& l : h)
    for (const auto& a : l.args)
      if (GenProblem::is_var(a)) vars.insert(a);
  return {vars.begin(), vars.end()};
}

// Calls f(assignment) for every map vars -> domain; stops when f returns true.
template <class F>
bool for_each_assignment(const std::vector<std::string>& vars, const std::vector<std::string>& domain, F&& f) {
  std::map<std::string, std::string> sigma;
  std::vector<std::size_t> digit(vars.size(), 0);
  if (!vars.empty() && domain.empty()) return false;
  for (;;) {
    for (std::size_t i = 0; i < vars.size(); ++i) sigma[vars[i]] = domain[digit[i]];
    if (f(sigma)) return true;
    std::size_t i = 0;
    while (i < vars.size() && ++digit[i] == domain.size()) digit[i++] = 0;
    if (i == vars.size()) return false;
  }
}

struct OracleContext {
  std::set<GroundLit> facts;          // saturated
  std::vector<std::string> constants;
};

inline OracleContext oracle_context(const GenProblem& g, const std::vector<GAxiom>& extra = {}) {
  std::set<GroundLit> ctx;
  std::set<std::string> consts;
  for (const auto& l : g.premise) {
    std::vector<std::string> args;
    for (const auto& a : l.args) {
      // premise variables become distinct fresh constants
      args.push_back(GenProblem::is_var(a) ? "_w" + a : a);
      consts.insert(args.back());
    }
    ctx.insert({l.pred, args, l.negated});
  }
  auto axioms = g.axioms;
  axioms.insert(axioms.end(), extra.begin(), extra.end());
  return {saturate(ctx, axioms), {consts.begin(), consts.end()}};
}

inline GroundLit ground(const GLit& l, const std::map<std::string, std::string>& sigma) {
  std::vector<std::string> args;
  for (const auto& a : l.args) args.push_back(GenProblem::is_var(a) ? sigma.at(a) : a);
  return {l.pred, args, l.negated};
}

inline bool oracle_entails(const GenProblem& g, const std::vector<GAxiom>& extra = {}) {
  const OracleContext c = oracle_context(g, extra);
  return for_each_assignment(hyp_vars(g.hypothesis), c.constants, [&](const auto& sigma) {
    for (const auto& l : g.hypothesis)
      if (!c.facts.contains(ground(l, sigma))) return false;
    return true;
  });
}

// Some identification of hypothesis variables with context constants or
// witnesses (which variables may share) makes context + hypothesis clash.
inline bool oracle_contradicts(const GenProblem& g, const std::vector<GAxiom>& extra = {}) {
  const OracleContext c = oracle_context(g, extra);
  if (has_clash(c.facts)) return true;
  const auto vars = hyp_vars(g.hypothesis);
  auto domain = c.constants;
  for (std::size_t i = 0; i < vars.size(); ++i) domain.push_back("_fresh" + std::to_string(i));
  auto axioms = g.axioms;
  axioms.insert(axioms.end(), extra.begin(), extra.end());
  return for_each_assignment(vars, domain, [&](const auto& sigma) {
    auto facts = c.facts;
    for (const auto& l : g.hypothesis) facts.insert(ground(l, sigma));
    return has_clash(saturate(std::move(facts), axioms));
  });
}

inline Label oracle_label(const GenProblem& g, const std::vector<GAxiom>& extra = {}) {
  if (oracle_entails(g, extra)) return Label::entailment;
  if (oracle_contradicts(g, extra)) return Label::contradiction;
  return Label::unknown;
}

inline std::vector<GAxiom> to_gaxioms(const std::vector<Axiom>& axioms) {
  std::vector<GAxiom> out;
  for (const auto& a : axioms) out.push_back({a.antecedent, a.consequent, a.negated});
  return out;
}

}  // namespace kbtest
