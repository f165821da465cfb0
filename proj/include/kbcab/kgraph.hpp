#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kbcab/relation.hpp"
#include "kbcab/triplet_store.hpp"
#include "kbcab/vocabulary.hpp"

namespace kbcab {

// Synset-level source relations.
enum class SynsetRelation { also_sees, verb_groups, similar_tos, hypernym, hyponym };

std::string_view synset_relation_name(SynsetRelation r);
SynsetRelation parse_synset_relation(std::string_view name);  // throws FormatError

struct SynsetEdge {
  std::string from;
  SynsetRelation relation;
  std::string to;
};

// Lemma-level edge as read from the source. The relation is kept as text and
// validated when the edge is turned into a triplet.
struct LemmaEdge {
  std::string from;
  std::string relation;
  std::string to;
};

struct SynsetGraph {
  std::map<std::string, std::set<std::string>> synsets;
  std::vector<SynsetEdge> synset_edges;
  std::vector<LemmaEdge> lemma_edges;

  // Throws FormatError if an edge references an undeclared synset.
  void validate() const;
};

using LemmaSet = std::set<std::string, std::less<>>;

// Synonyms from synsets linked by also_sees / verb_groups / similar_tos or
// sharing a lemma (a synset shares its lemmas with itself, so members of one
// synset are synonyms of each other). Emitted in both directions, reflexive
// pairs dropped, sorted and duplicate-free.
std::vector<Triplet> build_synonym_triplets(const SynsetGraph& g, Vocabulary& vocab);

// Lemma-level Cartesian expansion of the transitive closure of the synset
// edges of kind `which` (hypernym or hyponym). Cycles are reported through
// `warnings`; the closure still terminates.
std::vector<Triplet> build_hierarchy_triplets(const SynsetGraph& g, SynsetRelation which,
                                              Vocabulary& vocab,
                                              std::vector<std::string>* warnings = nullptr);

using NodeEdge = std::pair<std::int64_t, std::int64_t>;

// Reachability relation of a directed graph, sorted. A self-loop (a,a) is
// only present if it was in the input, even when a lies on a cycle.
std::vector<NodeEdge> transitive_closure(std::span<const NodeEdge> edges);

// True if some node reaches itself through a path of length >= 1 that is not
// just an input self-loop.
bool has_cycle(std::span<const NodeEdge> edges);

// Antonym and derivationally-related lemma edges, verbatim (not symmetrized).
std::vector<Triplet> collect_lemma_relations(const SynsetGraph& g, Vocabulary& vocab);

// Keeps a triplet iff both endpoint lemmas are listed.
std::vector<Triplet> filter_by_lemmas(std::span<const Triplet> triplets, const Vocabulary& vocab,
                                      const LemmaSet& lemmas);

struct DevSplit {
  std::vector<Triplet> train;
  std::vector<Triplet> dev;
};

// Uniform sample of exactly k triplets without replacement; deterministic per
// seed. Both halves keep the input order.
DevSplit split_dev(std::span<const Triplet> triplets, std::size_t k, std::uint64_t seed);

// Maps external (lemma, source-relation, lemma) edges into core relations,
// unions them with `triplets`, applies the lemma filter when given, and
// deduplicates. Result is sorted.
std::vector<Triplet> merge_external(std::span<const Triplet> triplets,
                                    std::span<const LemmaEdge> external,
                                    const std::map<std::string, std::string, std::less<>>& mapping,
                                    Vocabulary& vocab, const LemmaSet* lemmas = nullptr);

// ---- end-to-end construction ---------------------------------------------

struct KbBuildOptions {
  const LemmaSet* lemmas = nullptr;  // no filtering when null
  std::vector<LemmaEdge> external;
  std::map<std::string, std::string, std::less<>> external_mapping{{"similar", "synonym"}};
  std::size_t dev_size = 10000;
  std::uint64_t seed = 0;
};

struct KbBuildResult {
  Vocabulary vocab;
  std::vector<Triplet> train;
  std::vector<Triplet> dev;
  std::vector<std::string> warnings;
};

// Dev triplets are drawn from the source-derived set before the external
// edges are merged into the training half.
KbBuildResult build_knowledge_graph(const SynsetGraph& g, const KbBuildOptions& options);

// ---- text formats ----------------------------------------------------------

// `synset-id<TAB>lemma1,lemma2,...`
void read_synsets(std::istream& in, SynsetGraph& g);
// `synset-id<TAB>source-relation<TAB>synset-id`
void read_synset_edges(std::istream& in, SynsetGraph& g);
// `lemma<TAB>source-relation<TAB>lemma`
std::vector<LemmaEdge> read_lemma_edges(std::istream& in);
// one lemma per line
LemmaSet read_lemma_list(std::istream& in);

// `s-lemma<TAB>relation<TAB>o-lemma`; names are interned into `vocab`.
std::vector<Triplet> read_triplets(std::istream& in, Vocabulary& vocab);
// Written sorted lexicographically by (s, relation, o) text.
void write_triplets(std::ostream& out, std::span<const Triplet> triplets, const Vocabulary& vocab);

// File-path conveniences; throw FormatError when a file cannot be opened.
SynsetGraph load_synset_graph(const std::string& synsets_path, const std::string& synset_edges_path,
                              const std::string& lemma_edges_path);
std::vector<Triplet> load_triplets(const std::string& path, Vocabulary& vocab);
void save_triplets(const std::string& path, std::span<const Triplet> triplets,
                   const Vocabulary& vocab);

}  // namespace kbcab
