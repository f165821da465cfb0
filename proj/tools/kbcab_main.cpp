// kbcab: knowledge-base construction, ComplEx training and evaluation,
// abductive RTE proving, and the scoring service.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "kbcab/abduction.hpp"
#include "kbcab/checkpoint.hpp"
#include "kbcab/complex_model.hpp"
#include "kbcab/error.hpp"
#include "kbcab/kgraph.hpp"
#include "kbcab/ranking_eval.hpp"
#include "kbcab/rte.hpp"
#include "kbcab/service.hpp"

namespace {

using namespace kbcab;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// Thrown for flag combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

// ---- scorer specs ------------------------------------------------------------

struct ScorerSpec {
  std::string kind;  // kbc | search | remote | none
  std::string arg;
};

ScorerSpec parse_scorer_spec(const std::string& text) {
  if (text == "none") return {"none", ""};
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon + 1 == text.size())
    throw UsageError("scorer must be kbc:<checkpoint>, search:<triplets.tsv>, remote:<host:port> or none");
  ScorerSpec spec{text.substr(0, colon), text.substr(colon + 1)};
  if (spec.kind != "kbc" && spec.kind != "search" && spec.kind != "remote")
    throw UsageError("unknown scorer kind '" + spec.kind + "'");
  return spec;
}

std::shared_ptr<const TripletScorer> load_triplet_scorer(const ScorerSpec& spec) {
  if (spec.kind == "kbc") {
    auto params = std::make_shared<const ModelParams>(load_checkpoint(spec.arg));
    return std::make_shared<const KbcScorer>(params);
  }
  if (spec.kind == "search") {
    Vocabulary vocab;
    TripletStore store;
    for (const Triplet& t : load_triplets(spec.arg, vocab)) store.insert(t);
    return std::make_shared<const SearchScorer>(store, vocab);
  }
  throw UsageError("scorer '" + spec.kind + "' cannot score individual triplets here");
}

std::shared_ptr<const Scorer> load_scorer(const ScorerSpec& spec) {
  if (spec.kind == "none") return std::make_shared<const NullScorer>();
  if (spec.kind == "remote") return std::make_shared<const RemoteScorer>(spec.arg);
  return load_triplet_scorer(spec);
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw FormatError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<CandidatePair> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open pair file " + path);
  std::vector<CandidatePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'lemma<TAB>lemma'");
    pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return pairs;
}

// ---- subcommands -------------------------------------------------------------

struct BuildKbArgs {
  std::string synsets, synset_edges, lemma_edges, lemmas, external, out_train, out_dev;
  std::size_t dev_size = 10000;
  std::uint64_t seed = 0;
};

int run_build_kb(const BuildKbArgs& a) {
  SynsetGraph g = load_synset_graph(a.synsets, a.synset_edges, a.lemma_edges);
  KbBuildOptions opt;
  opt.dev_size = a.dev_size;
  opt.seed = a.seed;
  LemmaSet lemmas;
  if (!a.lemmas.empty()) {
    std::ifstream in(a.lemmas);
    if (!in) throw FormatError("cannot open lemma list " + a.lemmas);
    lemmas = read_lemma_list(in);
    opt.lemmas = &lemmas;
  }
  if (!a.external.empty()) {
    std::ifstream in(a.external);
    if (!in) throw FormatError("cannot open external edges " + a.external);
    opt.external = read_lemma_edges(in);
  }
  KbBuildResult kb = build_knowledge_graph(g, opt);
  for (const auto& w : kb.warnings) std::cerr << "warning: " << w << '\n';
  save_triplets(a.out_train, kb.train, kb.vocab);
  if (!a.out_dev.empty()) save_triplets(a.out_dev, kb.dev, kb.vocab);
  std::cerr << "train " << kb.train.size() << " triplets, dev " << kb.dev.size() << ", "
            << kb.vocab.entity_count() << " lemmas\n";
  return kExitOk;
}

struct TrainArgs {
  std::string triplets, out, mode = "1n";
  TrainConfig cfg;
  std::size_t log_every = 10;
};

int run_train(TrainArgs& a) {
  if (a.mode == "1n")
    a.cfg.mode = TrainMode::one_to_n;
  else if (a.mode == "neg")
    a.cfg.mode = TrainMode::negative_sampling;
  else
    throw UsageError("--mode must be 1n or neg");
  try {
    a.cfg.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  Vocabulary vocab;
  TripletStore store;
  for (const Triplet& t : load_triplets(a.triplets, vocab)) store.insert(t);
  const std::size_t every = a.log_every;
  const std::size_t epochs = a.cfg.epochs;
  ModelParams p = train(store, vocab, a.cfg, [every, epochs](std::size_t epoch, double loss) {
    if (every && (epoch % every == 0 || epoch == epochs))
      std::fprintf(stderr, "epoch %zu loss %.6f\n", epoch, loss);
  });
  save_checkpoint(p, a.out);
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, dev, out;
  std::vector<std::string> filters;
  bool raw = false;
};

int run_eval(const EvalArgs& a) {
  ModelParams p = load_checkpoint(a.checkpoint);
  // Lemmas outside the checkpoint cannot be ranked.
  Vocabulary vocab = p.vocab;
  std::vector<Triplet> dev = load_triplets(a.dev, vocab);
  FilterSet filter;
  for (const Triplet& t : dev) filter.insert(t);
  for (const auto& path : a.filters)
    for (const Triplet& t : load_triplets(path, vocab)) filter.insert(t);
  std::vector<Triplet> usable;
  for (const Triplet& t : dev)
    if (static_cast<std::size_t>(t.s) < p.entity_count() && static_cast<std::size_t>(t.o) < p.entity_count() &&
        static_cast<std::size_t>(t.r) < p.relation_count())
      usable.push_back(t);
  if (usable.size() < dev.size())
    std::cerr << "warning: skipped " << dev.size() - usable.size() << " dev triplets outside the model vocabulary\n";
  RankingMetrics m = evaluate(p, usable, filter, !a.raw);
  Output out(a.out);
  out.stream() << m.to_json() << '\n';
  return kExitOk;
}

struct ScoreArgs {
  std::string scorer, pairs_file, out;
  std::vector<std::string> pairs;
  double theta = 0.4;
  bool axioms = false;
};

int run_score(const ScoreArgs& a) {
  const ScorerSpec spec = parse_scorer_spec(a.scorer);
  if (spec.kind == "none") throw UsageError("score needs a kbc, search or remote scorer");
  std::vector<CandidatePair> pairs;
  if (!a.pairs_file.empty()) pairs = read_pairs(a.pairs_file);
  for (const auto& p : a.pairs) {
    const auto comma = p.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == p.size())
      throw UsageError("--pair expects 'a,b', got '" + p + "'");
    pairs.push_back({p.substr(0, comma), p.substr(comma + 1)});
  }
  if (pairs.empty()) throw UsageError("no pairs given (use --pair or --pairs)");

  Output out(a.out);
  std::vector<ScoredTriplet> scored;
  if (spec.kind == "remote") {
    scored = RemoteScorer(spec.arg).remote_score(pairs, a.theta);
  } else {
    auto scorer = load_triplet_scorer(spec);
    scored = score_pairs(*scorer, pairs);
    if (a.axioms) {
      std::vector<ScoredTriplet> kept;
      for (const auto& ax : generate_axioms(scored, a.theta)) kept.push_back(ax.provenance);
      scored = std::move(kept);
    }
  }
  if (a.axioms) {
    for (const auto& ax : generate_axioms(scored, 0.0)) out.stream() << ax.to_string() << '\n';
  } else {
    write_scored_tsv(out.stream(), scored);
  }
  return kExitOk;
}

struct ProveArgs {
  std::string problems, scorer = "none", out;
  ProveConfig cfg;
  std::vector<std::string> roles;
  std::size_t workers = 1;
  bool no_timing = false;
};

void finish_prove_config(ProveArgs& a) {
  a.cfg.role_predicates.insert(a.roles.begin(), a.roles.end());
  try {
    a.cfg.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  if (a.workers < 1) throw UsageError("--workers must be >= 1");
}

int run_prove(ProveArgs& a) {
  finish_prove_config(a);
  auto scorer = load_scorer(parse_scorer_spec(a.scorer));
  RunReport report = run_problem_file(a.problems, *scorer, a.cfg, a.workers);
  Output out(a.out);
  write_report(out.stream(), report, !a.no_timing);
  const auto& s = report.summary;
  std::fprintf(stderr, "%zu problems, %zu load errors, %zu timeouts", s.count, s.errors, s.timeouts);
  if (s.with_gold) std::fprintf(stderr, ", accuracy %.2f%%", s.accuracy);
  std::fprintf(stderr, "\n");
  return kExitOk;
}

struct BenchArgs {
  std::string problems, out;
  std::vector<std::string> scorers{"none"};
  ProveArgs prove;
  std::size_t runs = 5;
};

int run_bench(BenchArgs& a) {
  finish_prove_config(a.prove);
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  std::vector<ScorerSpec> specs;
  for (const auto& s : a.scorers) specs.push_back(parse_scorer_spec(s));
  ProblemSet set = load_problems(a.problems);
  for (const auto& e : set.errors) std::cerr << "skipped " << e.id << ": " << e.message << '\n';
  Output out(a.out);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto scorer = load_scorer(specs[i]);
    BenchRow row = bench(set.problems, *scorer, a.scorers[i], a.prove.cfg, a.runs, a.prove.workers);
    out.stream() << bench_row_json(row) << '\n';
    out.stream().flush();
  }
  return kExitOk;
}

struct ServeArgs {
  std::string scorer, host = "127.0.0.1";
  std::uint16_t port = 7070;
  double theta = 0.4;
  bool quiet = false;
};

int run_serve(const ServeArgs& a) {
  if (!(a.theta >= 0.0 && a.theta <= 1.0)) throw UsageError("--theta must lie in [0, 1]");
  const ScorerSpec spec = parse_scorer_spec(a.scorer);
  if (spec.kind != "kbc" && spec.kind != "search") throw UsageError("serve needs a kbc or search scorer");
  auto scorer = load_triplet_scorer(spec);

  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  ScoringServer server(scorer, a.theta, a.quiet ? nullptr : &std::cerr);
  const std::uint16_t port = server.start(a.host, a.port);
  std::cout << "port " << port << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  std::cerr << "shutting down\n";
  server.stop();
  std::cerr << "served " << server.requests_served() << " requests\n";
  return kExitOk;
}

void add_prove_options(CLI::App* cmd, ProveArgs& a) {
  cmd->add_option("--theta", a.cfg.theta, "Score threshold for injected axioms")->capture_default_str();
  cmd->add_option("--timeout-ms", a.cfg.timeout_ms, "Per-problem time limit in milliseconds")
      ->capture_default_str();
  cmd->add_option("--rounds", a.cfg.max_abduction_rounds, "Abduction rounds per proof direction")
      ->capture_default_str();
  cmd->add_option("--role", a.roles, "Unary predicate never used for abduction (repeatable)");
  cmd->add_option("--workers", a.workers, "Problems decided in parallel")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-base completion and abductive textual entailment"};
  app.require_subcommand(1);
  app.fallthrough(false);

  BuildKbArgs kb;
  auto* c_kb = app.add_subcommand("build-kb", "Extract lemma triplets from synset and lemma tables");
  c_kb->add_option("--synsets", kb.synsets, "TSV: synset<TAB>lemma,lemma,...")->required();
  c_kb->add_option("--synset-edges", kb.synset_edges, "TSV: synset<TAB>relation<TAB>synset")->required();
  c_kb->add_option("--lemma-edges", kb.lemma_edges, "TSV: lemma<TAB>relation<TAB>lemma")->required();
  c_kb->add_option("--lemmas", kb.lemmas, "Keep only triplets between these lemmas (one per line)");
  c_kb->add_option("--external", kb.external, "Extra lemma edges; 'similar' maps to synonym");
  c_kb->add_option("--dev-size", kb.dev_size, "Held-out triplets")->capture_default_str();
  c_kb->add_option("--seed", kb.seed, "Split seed")->capture_default_str();
  c_kb->add_option("--out", kb.out_train, "Training triplets TSV")->required();
  c_kb->add_option("--dev-out", kb.out_dev, "Dev triplets TSV");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a ComplEx model and write a checkpoint");
  c_train->add_option("--triplets", tr.triplets, "Training triplets TSV")->required();
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--dim", tr.cfg.dim, "Embedding dimension")->capture_default_str();
  c_train->add_option("--batch", tr.cfg.batch_size, "Batch size")->capture_default_str();
  c_train->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();
  c_train->add_option("--seed", tr.cfg.seed, "Random seed")->capture_default_str();
  c_train->add_option("--mode", tr.mode, "1n (score every object) or neg (negative sampling)")
      ->capture_default_str();
  c_train->add_option("--neg-ratio", tr.cfg.negative_ratio, "Negatives per fact in neg mode")
      ->capture_default_str();
  c_train->add_option("--lr", tr.cfg.adam.learning_rate, "Adam learning rate")->capture_default_str();
  c_train->add_option("--l2", tr.cfg.l2, "L2 weight on touched rows")->capture_default_str();
  c_train->add_option("--log-every", tr.log_every, "Log the loss every N epochs (0: never)")
      ->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Filtered MRR and Hits@1/3/10 on dev triplets");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  c_eval->add_option("--dev", ev.dev, "Dev triplets TSV")->required();
  c_eval->add_option("--filter", ev.filters, "Known-fact TSV files excluded from ranking (repeatable)");
  c_eval->add_flag("--raw", ev.raw, "Rank against every entity without filtering");
  c_eval->add_option("--out", ev.out, "Write metrics JSON here instead of stdout");

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Score lemma pairs under every relation");
  c_score->add_option("--scorer", sc.scorer, "kbc:<checkpoint> | search:<triplets.tsv> | remote:<host:port>")
      ->required();
  c_score->add_option("--pair", sc.pairs, "Lemma pair 'a,b' (repeatable)");
  c_score->add_option("--pairs", sc.pairs_file, "TSV of lemma pairs");
  c_score->add_option("--theta", sc.theta, "Threshold (remote scorers and --axioms)")->capture_default_str();
  c_score->add_flag("--axioms", sc.axioms, "Print compiled axioms above the threshold");
  c_score->add_option("--out", sc.out, "Output path");

  ProveArgs pv;
  auto* c_prove = app.add_subcommand("prove", "Decide RTE problems with on-demand axiom injection");
  c_prove->add_option("--problems", pv.problems, "JSON-lines problem file")->required();
  c_prove->add_option("--scorer", pv.scorer, "kbc:<ckpt> | search:<tsv> | remote:<host:port> | none")
      ->capture_default_str();
  add_prove_options(c_prove, pv);
  c_prove->add_flag("--no-timing", pv.no_timing, "Omit millis fields from the report");
  c_prove->add_option("--out", pv.out, "Report path");

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("serve", "Run the newline-delimited JSON scoring service");
  c_serve->add_option("--scorer", sv.scorer, "kbc:<checkpoint> | search:<triplets.tsv>")->required();
  c_serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  c_serve->add_option("--port", sv.port, "Port (0 picks a free one)")->capture_default_str();
  c_serve->add_option("--theta", sv.theta, "Default threshold")->capture_default_str();
  c_serve->add_flag("--quiet", sv.quiet, "No request log");

  BenchArgs bn;
  auto* c_bench = app.add_subcommand("bench", "Macro-average proving time over several runs");
  c_bench->add_option("--problems", bn.problems, "JSON-lines problem file")->required();
  c_bench->add_option("--scorer", bn.scorers, "Scorer variant (repeatable)")->capture_default_str();
  c_bench->add_option("--runs", bn.runs, "Runs per scorer")->capture_default_str();
  add_prove_options(c_bench, bn.prove);
  c_bench->add_option("--out", bn.out, "Report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_kb->parsed()) return run_build_kb(kb);
    if (c_train->parsed()) return run_train(tr);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_score->parsed()) return run_score(sc);
    if (c_prove->parsed()) return run_prove(pv);
    if (c_serve->parsed()) return run_serve(sv);
    if (c_bench->parsed()) return run_bench(bn);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
