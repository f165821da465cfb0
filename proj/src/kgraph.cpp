#include "kbcab/kgraph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "kbcab/error.hpp"

namespace kbcab {

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

[[noreturn]] void bad_line(const char* what, std::size_t lineno, std::string_view line) {
  throw FormatError(std::string(what) + " line " + std::to_string(lineno) + ": '" +
                    std::string(line) + "'");
}

std::vector<Triplet> sorted_unique(std::vector<Triplet> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Dense indexes for synset ids.
struct SynsetIndex {
  std::vector<const std::string*> names;
  std::unordered_map<std::string_view, std::int64_t> ids;

  explicit SynsetIndex(const SynsetGraph& g) {
    for (const auto& [id, lemmas] : g.synsets) {
      ids.emplace(id, static_cast<std::int64_t>(names.size()));
      names.push_back(&id);
    }
  }
  std::int64_t at(const std::string& id) const {
    auto it = ids.find(id);
    if (it == ids.end()) throw FormatError("unknown synset id: " + id);
    return it->second;
  }
};

void expand_product(const std::set<std::string>& from, const std::set<std::string>& to,
                    RelationId r, Vocabulary& vocab, std::vector<Triplet>& out) {
  for (const auto& a : from) {
    for (const auto& b : to) {
      if (a == b) continue;
      out.push_back({vocab.intern_entity(a), r, vocab.intern_entity(b)});
    }
  }
}

}  // namespace

std::string_view synset_relation_name(SynsetRelation r) {
  switch (r) {
    case SynsetRelation::also_sees: return "also_sees";
    case SynsetRelation::verb_groups: return "verb_groups";
    case SynsetRelation::similar_tos: return "similar_tos";
    case SynsetRelation::hypernym: return "hypernym";
    case SynsetRelation::hyponym: return "hyponym";
  }
  return "";
}

SynsetRelation parse_synset_relation(std::string_view name) {
  for (auto r : {SynsetRelation::also_sees, SynsetRelation::verb_groups,
                 SynsetRelation::similar_tos, SynsetRelation::hypernym, SynsetRelation::hyponym})
    if (synset_relation_name(r) == name) return r;
  throw FormatError("unknown synset relation: '" + std::string(name) + "'");
}

void SynsetGraph::validate() const {
  for (const auto& e : synset_edges) {
    if (!synsets.contains(e.from)) throw FormatError("edge references unknown synset: " + e.from);
    if (!synsets.contains(e.to)) throw FormatError("edge references unknown synset: " + e.to);
  }
}

std::vector<Triplet> build_synonym_triplets(const SynsetGraph& g, Vocabulary& vocab) {
  g.validate();
  const RelationId syn = static_cast<RelationId>(Relation::synonym);
  SynsetIndex index(g);

  std::set<std::pair<std::int64_t, std::int64_t>> linked;
  auto link = [&](std::int64_t a, std::int64_t b) { linked.insert(std::minmax(a, b)); };

  for (const auto& e : g.synset_edges) {
    if (e.relation == SynsetRelation::also_sees || e.relation == SynsetRelation::verb_groups ||
        e.relation == SynsetRelation::similar_tos)
      link(index.at(e.from), index.at(e.to));
  }
  std::map<std::string_view, std::vector<std::int64_t>> by_lemma;
  for (const auto& [id, lemmas] : g.synsets)
    for (const auto& l : lemmas) by_lemma[l].push_back(index.at(id));
  for (const auto& [lemma, ids] : by_lemma)
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i; j < ids.size(); ++j) link(ids[i], ids[j]);

  std::vector<Triplet> out;
  for (const auto& [a, b] : linked) {
    const auto& la = g.synsets.at(*index.names[static_cast<std::size_t>(a)]);
    const auto& lb = g.synsets.at(*index.names[static_cast<std::size_t>(b)]);
    expand_product(la, lb, syn, vocab, out);
    expand_product(lb, la, syn, vocab, out);
  }
  return sorted_unique(std::move(out));
}

std::vector<NodeEdge> transitive_closure(std::span<const NodeEdge> edges) {
  std::map<std::int64_t, std::vector<std::int64_t>> adj;
  std::set<NodeEdge> self_loops;
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    if (a == b) self_loops.insert({a, b});
  }
  std::vector<NodeEdge> out;
  std::set<std::int64_t> seen;
  std::vector<std::int64_t> stack;
  for (const auto& [start, succ] : adj) {
    seen.clear();
    stack.assign(succ.begin(), succ.end());
    while (!stack.empty()) {
      std::int64_t n = stack.back();
      stack.pop_back();
      if (!seen.insert(n).second) continue;
      auto it = adj.find(n);
      if (it != adj.end())
        for (std::int64_t m : it->second)
          if (!seen.contains(m)) stack.push_back(m);
    }
    for (std::int64_t n : seen)
      if (n != start || self_loops.contains({start, start})) out.emplace_back(start, n);
  }
  return out;
}

bool has_cycle(std::span<const NodeEdge> edges) {
  std::vector<NodeEdge> proper;
  for (const auto& e : edges)
    if (e.first != e.second) proper.push_back(e);
  // a proper edge (a,b) lies on a cycle iff b reaches a
  auto closure = transitive_closure(proper);
  std::set<NodeEdge> reach(closure.begin(), closure.end());
  return std::any_of(proper.begin(), proper.end(),
                     [&](const NodeEdge& e) { return reach.contains({e.second, e.first}); });
}

std::vector<Triplet> build_hierarchy_triplets(const SynsetGraph& g, SynsetRelation which,
                                              Vocabulary& vocab,
                                              std::vector<std::string>* warnings) {
  if (which != SynsetRelation::hypernym && which != SynsetRelation::hyponym)
    throw ArgumentError("hierarchy relation must be hypernym or hyponym");
  g.validate();
  const RelationId r = static_cast<RelationId>(which == SynsetRelation::hypernym
                                                   ? Relation::hypernym
                                                   : Relation::hyponym);
  SynsetIndex index(g);
  std::vector<NodeEdge> edges;
  for (const auto& e : g.synset_edges)
    if (e.relation == which) edges.emplace_back(index.at(e.from), index.at(e.to));

  if (warnings && has_cycle(edges))
    warnings->push_back("cycle in " + std::string(synset_relation_name(which)) +
                        " edges; closure computed to fixed point");

  std::vector<Triplet> out;
  for (const auto& [a, b] : transitive_closure(edges)) {
    expand_product(g.synsets.at(*index.names[static_cast<std::size_t>(a)]),
                   g.synsets.at(*index.names[static_cast<std::size_t>(b)]), r, vocab, out);
  }
  return sorted_unique(std::move(out));
}

std::vector<Triplet> collect_lemma_relations(const SynsetGraph& g, Vocabulary& vocab) {
  std::vector<Triplet> out;
  for (const auto& e : g.lemma_edges) {
    auto rel = parse_relation(e.relation);
    if (!rel || (*rel != Relation::antonym && *rel != Relation::derivationally_related))
      throw FormatError("unknown lemma relation: '" + e.relation + "'");
    if (e.from == e.to) continue;
    out.push_back(
        {vocab.intern_entity(e.from), static_cast<RelationId>(*rel), vocab.intern_entity(e.to)});
  }
  return sorted_unique(std::move(out));
}

std::vector<Triplet> filter_by_lemmas(std::span<const Triplet> triplets, const Vocabulary& vocab,
                                      const LemmaSet& lemmas) {
  std::vector<Triplet> out;
  for (const Triplet& t : triplets) {
    if (lemmas.contains(vocab.entity_name(t.s)) && lemmas.contains(vocab.entity_name(t.o)))
      out.push_back(t);
  }
  return out;
}

DevSplit split_dev(std::span<const Triplet> triplets, std::size_t k, std::uint64_t seed) {
  if (k > triplets.size())
    throw ArgumentError("dev size " + std::to_string(k) + " exceeds triplet count " +
                        std::to_string(triplets.size()));
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: the first k slots are the sample
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<bool> in_dev(triplets.size(), false);
  for (std::size_t i = 0; i < k; ++i) in_dev[order[i]] = true;

  DevSplit split;
  split.dev.reserve(k);
  split.train.reserve(triplets.size() - k);
  for (std::size_t i = 0; i < triplets.size(); ++i)
    (in_dev[i] ? split.dev : split.train).push_back(triplets[i]);
  return split;
}

std::vector<Triplet> merge_external(std::span<const Triplet> triplets,
                                    std::span<const LemmaEdge> external,
                                    const std::map<std::string, std::string, std::less<>>& mapping,
                                    Vocabulary& vocab, const LemmaSet* lemmas) {
  std::vector<Triplet> out(triplets.begin(), triplets.end());
  for (const auto& e : external) {
    auto it = mapping.find(e.relation);
    if (it == mapping.end())
      throw ArgumentError("no mapping for external relation '" + e.relation + "'");
    if (e.from == e.to) continue;
    if (lemmas && (!lemmas->contains(e.from) || !lemmas->contains(e.to))) continue;
    out.push_back({vocab.intern_entity(e.from), vocab.intern_relation(it->second),
                   vocab.intern_entity(e.to)});
  }
  if (lemmas) out = filter_by_lemmas(out, vocab, *lemmas);
  return sorted_unique(std::move(out));
}

KbBuildResult build_knowledge_graph(const SynsetGraph& g, const KbBuildOptions& options) {
  KbBuildResult result;
  Vocabulary& vocab = result.vocab;

  std::vector<Triplet> all = build_synonym_triplets(g, vocab);
  for (SynsetRelation which : {SynsetRelation::hypernym, SynsetRelation::hyponym}) {
    auto part = build_hierarchy_triplets(g, which, vocab, &result.warnings);
    all.insert(all.end(), part.begin(), part.end());
  }
  auto lemma_part = collect_lemma_relations(g, vocab);
  all.insert(all.end(), lemma_part.begin(), lemma_part.end());
  if (options.lemmas) all = filter_by_lemmas(all, vocab, *options.lemmas);
  all = sorted_unique(std::move(all));

  DevSplit split = split_dev(all, options.dev_size, options.seed);
  result.dev = sorted_unique(std::move(split.dev));
  result.train = merge_external(split.train, options.external, options.external_mapping, vocab,
                                options.lemmas);
  // an external edge may restate a dev triplet; dev stays disjoint from train
  std::set<Triplet> dev_set(result.dev.begin(), result.dev.end());
  std::erase_if(result.train, [&](const Triplet& t) { return dev_set.contains(t); });
  return result;
}

// ---- text formats ----------------------------------------------------------

void read_synsets(std::istream& in, SynsetGraph& g) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim_cr(line);
    if (blank(view)) continue;
    auto cols = split(view, '\t');
    if (cols.size() != 2 || cols[0].empty()) bad_line("synset", lineno, view);
    auto& lemmas = g.synsets[cols[0]];
    for (auto& l : split(cols[1], ','))
      if (!l.empty()) lemmas.insert(std::move(l));
    if (lemmas.empty()) bad_line("synset (no lemmas)", lineno, view);
  }
}

void read_synset_edges(std::istream& in, SynsetGraph& g) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim_cr(line);
    if (blank(view)) continue;
    auto cols = split(view, '\t');
    if (cols.size() != 3) bad_line("synset-edge", lineno, view);
    g.synset_edges.push_back({cols[0], parse_synset_relation(cols[1]), cols[2]});
  }
}

std::vector<LemmaEdge> read_lemma_edges(std::istream& in) {
  std::vector<LemmaEdge> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim_cr(line);
    if (blank(view)) continue;
    auto cols = split(view, '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[2].empty()) bad_line("lemma-edge", lineno, view);
    out.push_back({cols[0], cols[1], cols[2]});
  }
  return out;
}

LemmaSet read_lemma_list(std::istream& in) {
  LemmaSet out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = trim_cr(line);
    if (!blank(view)) out.emplace(view);
  }
  return out;
}

std::vector<Triplet> read_triplets(std::istream& in, Vocabulary& vocab) {
  std::vector<Triplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim_cr(line);
    if (blank(view)) continue;
    auto cols = split(view, '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty())
      bad_line("triplet", lineno, view);
    out.push_back(
        {vocab.intern_entity(cols[0]), vocab.intern_relation(cols[1]), vocab.intern_entity(cols[2])});
  }
  return out;
}

void write_triplets(std::ostream& out, std::span<const Triplet> triplets, const Vocabulary& vocab) {
  using Row = std::tuple<const std::string*, const std::string*, const std::string*>;
  std::vector<Row> rows;
  rows.reserve(triplets.size());
  for (const Triplet& t : triplets)
    rows.emplace_back(&vocab.entity_name(t.s), &vocab.relation_name(t.r), &vocab.entity_name(t.o));
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(*std::get<0>(a), *std::get<1>(a), *std::get<2>(a)) <
           std::tie(*std::get<0>(b), *std::get<1>(b), *std::get<2>(b));
  });
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) {
                           return *std::get<0>(a) == *std::get<0>(b) &&
                                  *std::get<1>(a) == *std::get<1>(b) &&
                                  *std::get<2>(a) == *std::get<2>(b);
                         }),
             rows.end());
  for (const auto& [s, r, o] : rows) out << *s << '\t' << *r << '\t' << *o << '\n';
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

}  // namespace

SynsetGraph load_synset_graph(const std::string& synsets_path, const std::string& synset_edges_path,
                              const std::string& lemma_edges_path) {
  SynsetGraph g;
  {
    auto in = open_in(synsets_path);
    read_synsets(in, g);
  }
  if (!synset_edges_path.empty()) {
    auto in = open_in(synset_edges_path);
    read_synset_edges(in, g);
  }
  if (!lemma_edges_path.empty()) {
    auto in = open_in(lemma_edges_path);
    g.lemma_edges = read_lemma_edges(in);
  }
  g.validate();
  return g;
}

std::vector<Triplet> load_triplets(const std::string& path, Vocabulary& vocab) {
  auto in = open_in(path);
  return read_triplets(in, vocab);
}

void save_triplets(const std::string& path, std::span<const Triplet> triplets,
                   const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  write_triplets(out, triplets, vocab);
}

}  // namespace kbcab
