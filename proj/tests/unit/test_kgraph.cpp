#include <doctest.h>

#include <random>
#include <sstream>

#include "kbcab/error.hpp"
#include "kbcab/kgraph.hpp"
#include "support.hpp"

using namespace kbcab;

namespace {

using Named = std::tuple<std::string, std::string, std::string>;

std::set<Named> named(const std::vector<Triplet>& ts, const Vocabulary& v) {
  std::set<Named> out;
  for (const auto& t : ts) out.insert({v.entity_name(t.s), v.relation_name(t.r), v.entity_name(t.o)});
  return out;
}

SynsetGraph graph_of(std::map<std::string, std::set<std::string>> synsets, std::vector<SynsetEdge> edges = {},
                     std::vector<LemmaEdge> lemma_edges = {}) {
  SynsetGraph g;
  g.synsets = std::move(synsets);
  g.synset_edges = std::move(edges);
  g.lemma_edges = std::move(lemma_edges);
  return g;
}

}  // namespace

TEST_SUITE("kgraph") {

TEST_CASE("vocabulary starts with the core relations and keeps ids dense") {
  Vocabulary v;
  REQUIRE(v.relation_count() == 5);
  CHECK(v.relation_name(0) == "synonym");
  CHECK(v.relation_name(4) == "derivationally-related");
  CHECK(v.intern_entity("dog") == 0);
  CHECK(v.intern_entity("cat") == 1);
  CHECK(v.intern_entity("dog") == 0);
  CHECK(v.entity_id("cat") == 1);
  CHECK_FALSE(v.entity_id("cow"));
  CHECK(v.intern_relation("similar") == 5);
  CHECK_THROWS_AS(v.entity_name(7), ArgumentError);
  for (EntityId i = 0; i < static_cast<EntityId>(v.entity_count()); ++i)
    CHECK(v.entity_id(v.entity_name(i)) == i);

  auto copy = Vocabulary::from_names(v.entity_names(), v.relation_names());
  CHECK(copy == v);
  CHECK_THROWS_AS(Vocabulary::from_names({"a", "a"}, v.relation_names()), FormatError);
  CHECK_THROWS_AS(Vocabulary::from_names({"a"}, {"hypernym", "synonym", "antonym", "hyponym",
                                                 "derivationally-related"}),
                  FormatError);
}

TEST_CASE("triplet store indexes agree with the set under random inserts") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> e(0, 9), r(0, 2);
  TripletStore store;
  std::set<Triplet> ref;
  for (int i = 0; i < 400; ++i) {
    Triplet t{e(rng), r(rng), e(rng)};
    CHECK(store.insert(t) == ref.insert(t).second);
  }
  CHECK(store.size() == ref.size());
  for (EntityId a = 0; a < 10; ++a)
    for (RelationId rel = 0; rel < 3; ++rel) {
      std::vector<EntityId> objs, subs;
      for (const auto& t : ref) {
        if (t.s == a && t.r == rel) objs.push_back(t.o);
        if (t.o == a && t.r == rel) subs.push_back(t.s);
      }
      std::sort(subs.begin(), subs.end());
      auto so = store.objects(a, rel);
      auto ss = store.subjects(a, rel);
      CHECK(std::vector<EntityId>(so.begin(), so.end()) == objs);
      CHECK(std::vector<EntityId>(ss.begin(), ss.end()) == subs);
      for (EntityId b = 0; b < 10; ++b) CHECK(store.contains(a, rel, b) == ref.contains({a, rel, b}));
    }
}

TEST_CASE("synonyms from linked synsets") {
  Vocabulary v;
  auto g = graph_of({{"s1", {"make"}}, {"s2", {"build"}}}, {{"s1", SynsetRelation::similar_tos, "s2"}});
  CHECK(named(build_synonym_triplets(g, v), v) ==
        std::set<Named>{{"make", "synonym", "build"}, {"build", "synonym", "make"}});
}

TEST_CASE("a lone single-lemma synset gives no synonyms") {
  Vocabulary v;
  CHECK(build_synonym_triplets(graph_of({{"s1", {"run"}}}), v).empty());
}

TEST_CASE("synsets sharing a lemma give six directed pairs") {
  Vocabulary v;
  auto g = graph_of({{"s1", {"big", "large"}}, {"s2", {"large", "grand"}}});
  auto out = named(build_synonym_triplets(g, v), v);
  CHECK(out.size() == 6);
  CHECK_FALSE(out.contains({"large", "synonym", "large"}));
  CHECK(out.contains({"big", "synonym", "grand"}));
  CHECK(out.contains({"grand", "synonym", "big"}));
}

TEST_CASE("synonym output is symmetric and irreflexive on random graphs") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    SynsetGraph g;
    std::uniform_int_distribution<int> lemma(0, 11), count(1, 3), syn(0, 7);
    for (int s = 0; s < 8; ++s)
      for (int k = count(rng); k > 0; --k) g.synsets["s" + std::to_string(s)].insert("l" + std::to_string(lemma(rng)));
    for (int k = 0; k < 5; ++k)
      g.synset_edges.push_back({"s" + std::to_string(syn(rng)), SynsetRelation::also_sees, "s" + std::to_string(syn(rng))});
    Vocabulary v;
    auto ts = build_synonym_triplets(g, v);
    std::set<Triplet> set(ts.begin(), ts.end());
    CHECK(set.size() == ts.size());
    for (const auto& t : ts) {
      CHECK(t.s != t.o);
      CHECK(set.contains({t.o, t.r, t.s}));
    }
  }
}

TEST_CASE("hypernym closure reaches two steps up") {
  Vocabulary v;
  auto g = graph_of({{"puppy.n", {"puppy"}}, {"dog.n", {"dog"}}, {"animal.n", {"animal"}}},
                    {{"puppy.n", SynsetRelation::hypernym, "dog.n"}, {"dog.n", SynsetRelation::hypernym, "animal.n"}});
  auto out = named(build_hierarchy_triplets(g, SynsetRelation::hypernym, v), v);
  CHECK(out.contains({"puppy", "hypernym", "animal"}));
  CHECK(out.size() == 3);
  CHECK(build_hierarchy_triplets(g, SynsetRelation::hyponym, v).empty());
}

TEST_CASE("four-chain closes to six pairs") {
  Vocabulary v;
  auto g = graph_of({{"a", {"a"}}, {"b", {"b"}}, {"c", {"c"}}, {"d", {"d"}}},
                    {{"a", SynsetRelation::hypernym, "b"},
                     {"b", SynsetRelation::hypernym, "c"},
                     {"c", SynsetRelation::hypernym, "d"}});
  CHECK(build_hierarchy_triplets(g, SynsetRelation::hypernym, v).size() == 6);
}

TEST_CASE("hierarchy expands synsets as a cartesian product") {
  Vocabulary v;
  auto g = graph_of({{"x", {"hound", "dog"}}, {"y", {"canine", "dog"}}}, {{"x", SynsetRelation::hypernym, "y"}});
  auto out = named(build_hierarchy_triplets(g, SynsetRelation::hypernym, v), v);
  CHECK(out == std::set<Named>{{"hound", "hypernym", "canine"}, {"hound", "hypernym", "dog"}, {"dog", "hypernym", "canine"}});
}

TEST_CASE("hierarchy cycles are reported and still terminate") {
  Vocabulary v;
  auto g = graph_of({{"a", {"a"}}, {"b", {"b"}}},
                    {{"a", SynsetRelation::hypernym, "b"}, {"b", SynsetRelation::hypernym, "a"}});
  std::vector<std::string> warnings;
  auto out = named(build_hierarchy_triplets(g, SynsetRelation::hypernym, v, &warnings), v);
  CHECK(out == std::set<Named>{{"a", "hypernym", "b"}, {"b", "hypernym", "a"}});
  CHECK(warnings.size() == 1);
}

TEST_CASE("transitive closure examples") {
  CHECK(transitive_closure({}).empty());
  std::vector<NodeEdge> e{{1, 2}, {2, 3}};
  CHECK(transitive_closure(e) == std::vector<NodeEdge>{{1, 2}, {1, 3}, {2, 3}});
  std::vector<NodeEdge> loop{{4, 4}, {4, 5}};
  CHECK(transitive_closure(loop) == std::vector<NodeEdge>{{4, 4}, {4, 5}});
  std::vector<NodeEdge> cyc{{1, 2}, {2, 1}};
  CHECK(has_cycle(cyc));
  CHECK_FALSE(has_cycle(loop));
}

TEST_CASE("transitive closure matches matrix powers and is idempotent") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    auto edges = kbtest::random_graph(rng, 30);
    auto closure = transitive_closure(edges);
    CHECK(closure == kbtest::matrix_closure(edges));
    CHECK(transitive_closure(closure) == closure);
    std::set<NodeEdge> c(closure.begin(), closure.end());
    for (const auto& e : edges) CHECK(c.contains(e));
  }
}

TEST_CASE("lemma relations are collected verbatim") {
  Vocabulary v;
  auto one = graph_of({}, {}, {{"parent", "antonym", "child"}});
  CHECK(named(collect_lemma_relations(one, v), v) == std::set<Named>{{"parent", "antonym", "child"}});
  CHECK(collect_lemma_relations(graph_of({}), v).empty());

  auto mixed = graph_of({}, {},
                        {{"hot", "antonym", "cold"}, {"run", "derivationally-related", "runner"}, {"cold", "antonym", "hot"}});
  auto ts = collect_lemma_relations(mixed, v);
  REQUIRE(ts.size() == 3);
  const auto run = *v.entity_id("run"), runner = *v.entity_id("runner");
  CHECK(std::count(ts.begin(), ts.end(), Triplet{run, static_cast<RelationId>(Relation::derivationally_related), runner}) == 1);
  CHECK(std::count_if(ts.begin(), ts.end(), [](const Triplet& t) { return t.r == static_cast<RelationId>(Relation::antonym); }) == 2);

  auto bad = graph_of({}, {}, {{"a", "meronym", "b"}});
  CHECK_THROWS_AS(collect_lemma_relations(bad, v), FormatError);
}

TEST_CASE("lemma filter") {
  Vocabulary v;
  const auto make = v.intern_entity("make"), build = v.intern_entity("build"), construct = v.intern_entity("construct");
  std::vector<Triplet> ts{{make, 0, build}, {make, 0, construct}};
  LemmaSet list{"make", "build"};
  CHECK(filter_by_lemmas(ts, v, list) == std::vector<Triplet>{{make, 0, build}});
  CHECK(filter_by_lemmas(ts, v, {}).empty());
  CHECK(filter_by_lemmas(ts, v, LemmaSet{"make", "build", "construct"}) == ts);
  auto once = filter_by_lemmas(ts, v, list);
  CHECK(filter_by_lemmas(once, v, list) == once);
}

TEST_CASE("dev split") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 50; ++i) ts.push_back({i, 0, i + 1});
  auto none = split_dev(ts, 0, 1);
  CHECK(none.train == ts);
  CHECK(none.dev.empty());
  auto all = split_dev(ts, ts.size(), 1);
  CHECK(all.train.empty());
  CHECK(all.dev == ts);
  CHECK_THROWS_AS(split_dev(ts, 51, 1), ArgumentError);

  auto a = split_dev(ts, 10, 42), b = split_dev(ts, 10, 42);
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK(a.dev.size() == 10);
  std::set<Triplet> u(a.train.begin(), a.train.end());
  for (const auto& t : a.dev) CHECK(u.insert(t).second);
  CHECK(u == std::set<Triplet>(ts.begin(), ts.end()));
  CHECK(split_dev(ts, 10, 43).dev != a.dev);
}

TEST_CASE("dev split selects every triplet about equally often") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 20; ++i) ts.push_back({i, 0, 0});
  std::vector<int> hits(20);
  const int trials = 4000;
  for (int seed = 0; seed < trials; ++seed)
    for (const auto& t : split_dev(ts, 5, static_cast<std::uint64_t>(seed)).dev) ++hits[static_cast<std::size_t>(t.s)];
  // expected 1000 per element, binomial sd ~27
  for (int h : hits) CHECK(std::abs(h - 1000) < 140);
}

TEST_CASE("external edges are mapped, filtered and deduplicated") {
  Vocabulary v;
  const auto toss = v.intern_entity("toss"), thr = v.intern_entity("throw");
  std::map<std::string, std::string, std::less<>> mapping{{"similar", "synonym"}};
  std::vector<Triplet> base{{thr, 0, toss}};
  auto merged = merge_external(base, std::vector<LemmaEdge>{{"toss", "similar", "throw"}}, mapping, v);
  CHECK(named(merged, v) == std::set<Named>{{"toss", "synonym", "throw"}, {"throw", "synonym", "toss"}});
  CHECK(merge_external(base, {}, mapping, v) == base);
  CHECK(merge_external(base, std::vector<LemmaEdge>{{"throw", "similar", "toss"}}, mapping, v).size() == 1);
  CHECK_THROWS_AS(merge_external(base, std::vector<LemmaEdge>{{"a", "happens-before", "b"}}, mapping, v),
                  ArgumentError);
  LemmaSet only{"toss", "throw"};
  CHECK(merge_external(base, std::vector<LemmaEdge>{{"toss", "similar", "fling"}}, mapping, v, &only).size() == 1);
}

TEST_CASE("end-to-end build keeps dev out of train") {
  std::istringstream syn("s1\tmake,build\ns2\tconstruct\ns3\tdog\ns4\tanimal\n");
  std::istringstream edges("s1\tsimilar_tos\ts2\ns3\thypernym\ts4\n");
  std::istringstream lemmas("parent\tantonym\tchild\n");
  SynsetGraph g;
  read_synsets(syn, g);
  read_synset_edges(edges, g);
  g.lemma_edges = read_lemma_edges(lemmas);
  g.validate();
  KbBuildOptions opt;
  opt.dev_size = 3;
  opt.seed = 9;
  opt.external = {{"toss", "similar", "throw"}};
  auto kb = build_knowledge_graph(g, opt);
  // 6 synonyms + 1 hypernym + 1 antonym, 3 held out, 1 external added
  CHECK(kb.dev.size() == 3);
  CHECK(kb.train.size() == 6);
  std::set<Triplet> dev(kb.dev.begin(), kb.dev.end());
  for (const auto& t : kb.train) CHECK_FALSE(dev.contains(t));
  for (const auto& t : kb.dev) CHECK(kb.vocab.entity_name(t.s) != "toss");
}

TEST_CASE("triplet files are written sorted and read back") {
  Vocabulary v;
  std::istringstream in("zebra\thypernym\tanimal\nant\thypernym\tinsect\nant\thypernym\tinsect\n");
  auto ts = read_triplets(in, v);
  std::ostringstream out;
  write_triplets(out, ts, v);
  CHECK(out.str() == "ant\thypernym\tinsect\nzebra\thypernym\tanimal\n");

  std::istringstream bad("a\tb\n");
  CHECK_THROWS_AS(read_triplets(bad, v), FormatError);
  std::istringstream extra("a\tmeronym\tb\n");
  CHECK(read_triplets(extra, v).front().r == 5);
  std::istringstream badsyn("s1\n");
  SynsetGraph g;
  CHECK_THROWS_AS(read_synsets(badsyn, g), FormatError);
  SynsetGraph dangling = graph_of({{"s1", {"a"}}}, {{"s1", SynsetRelation::hypernym, "s9"}});
  CHECK_THROWS_AS(dangling.validate(), FormatError);
}

}  // TEST_SUITE
