#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <chrono>
#include <sstream>

#include "kbcab/abduction.hpp"
#include "kbcab/checkpoint.hpp"
#include "kbcab/complex_model.hpp"
#include "kbcab/error.hpp"
#include "kbcab/formula.hpp"
#include "kbcab/kgraph.hpp"
#include "kbcab/prover.hpp"
#include "kbcab/ranking_eval.hpp"
#include "kbcab/rte.hpp"
#include "kbcab/service.hpp"

namespace py = pybind11;
using namespace kbcab;

namespace {


Relation relation_arg(const std::string& name) {
  auto r = parse_relation(name);
  if (!r) throw ArgumentError("unknown relation '" + name + "'");
  return *r;
}

EntityId entity_arg(const ModelParams& p, const std::string& name) {
  auto id = p.vocab.entity_id(name);
  if (!id) throw ArgumentError("entity '" + name + "' is not in the model vocabulary");
  return *id;
}

RelationId model_relation_arg(const ModelParams& p, const std::string& name) {
  auto id = p.vocab.relation_id(name);
  if (!id) throw ArgumentError("relation '" + name + "' is not in the model vocabulary");
  return *id;
}

py::dict axiom_dict(const Axiom& a) {
  py::dict d;
  d["axiom"] = a.to_string();
  d["antecedent"] = a.antecedent;
  d["consequent"] = a.consequent;
  d["negated"] = a.negated;
  d["s"] = a.provenance.s;
  d["r"] = std::string(relation_name(a.provenance.r));
  d["o"] = a.provenance.o;
  d["score"] = a.provenance.score;
  return d;
}

py::list axiom_list(std::span<const Axiom> axioms) {
  py::list out;
  for (const Axiom& a : axioms) out.append(axiom_dict(a));
  return out;
}

std::vector<CandidatePair> pairs_arg(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<CandidatePair> out;
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

py::dict metrics_dict(const RankingMetrics& m) {
  py::dict d;
  d["mrr"] = m.mrr;
  for (const auto& [n, v] : m.hits) d[("hits" + std::to_string(n)).c_str()] = v;
  d["count"] = m.count;
  return d;
}

py::dict decision_dict(const Decision& d) {
  py::dict out;
  out["label"] = std::string(label_name(d.label));
  out["axioms_used"] = axiom_list(d.axioms_used);
  out["injected"] = axiom_list(d.injected);
  out["timed_out"] = d.timed_out;
  out["error"] = d.error;
  out["warnings"] = d.warnings;
  return out;
}

ProveConfig prove_config(double theta, int rounds, std::int64_t timeout_ms, const std::set<std::string>& roles) {
  ProveConfig cfg;
  cfg.theta = theta;
  cfg.max_abduction_rounds = rounds;
  cfg.timeout_ms = timeout_ms;
  cfg.role_predicates = roles;
  cfg.validate();
  return cfg;
}

std::shared_ptr<const Scorer> scorer_arg(const py::object& obj) {
  if (obj.is_none()) return std::make_shared<const NullScorer>();
  return obj.cast<std::shared_ptr<Scorer>>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knowledge-base completion and abductive theorem proving";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<SyntaxError>(m, "FormulaSyntaxError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<UnsupportedFragment>(m, "UnsupportedFragment", PyExc_ValueError);
  py::register_exception<RemoteScorerError>(m, "RemoteScorerError", PyExc_ConnectionError);

  m.attr("RELATIONS") = [] {
    py::list out;
    for (Relation r : kAllRelations) out.append(std::string(relation_name(r)));
    return out;
  }();

  py::class_<ModelParams, std::shared_ptr<ModelParams>>(m, "Model")
      .def_static("load", [](const std::string& path) { return std::make_shared<ModelParams>(load_checkpoint(path)); },
                  py::arg("path"))
      .def("save", [](const ModelParams& p, const std::string& path) { save_checkpoint(p, path); }, py::arg("path"))
      .def_readonly("dim", &ModelParams::dim)
      .def_property_readonly("entities", [](const ModelParams& p) { return p.vocab.entity_names(); })
      .def_property_readonly("relations", [](const ModelParams& p) { return p.vocab.relation_names(); })
      .def(
          "score",
          [](const ModelParams& p, const std::string& s, const std::string& r, const std::string& o) {
            return score(p, entity_arg(p, s), model_relation_arg(p, r), entity_arg(p, o));
          },
          py::arg("s"), py::arg("r"), py::arg("o"))
      .def(
          "score_all",
          [](const ModelParams& p, const std::string& s, const std::string& r) {
            return score_1n(p, entity_arg(p, s), model_relation_arg(p, r));
          },
          py::arg("s"), py::arg("r"), "Scores of (s, r, o) for every entity o, in vocabulary order.")
      .def(
          "evaluate",
          [](const ModelParams& p, const std::string& dev_path, const std::vector<std::string>& filter_paths, bool filtered) {
            Vocabulary v = p.vocab;
            auto dev = load_triplets(dev_path, v);
            if (v.entity_count() != p.vocab.entity_count() || v.relation_count() != p.vocab.relation_count())
              throw ArgumentError("dev triplets use names outside the model vocabulary");
            FilterSet filter(dev);
            for (const auto& path : filter_paths)
              for (const Triplet& t : load_triplets(path, v))
                if (t.s < static_cast<EntityId>(p.vocab.entity_count()) && t.o < static_cast<EntityId>(p.vocab.entity_count()) &&
                    t.r < static_cast<RelationId>(p.vocab.relation_count()))
                  filter.insert(t);
            return metrics_dict(evaluate(p, dev, filter, filtered));
          },
          py::arg("dev_path"), py::arg("filter_paths") = std::vector<std::string>{}, py::arg("filtered") = true);

  m.def(
      "train",
      [](const std::string& triplets_path, std::size_t dim, std::size_t epochs, std::size_t batch_size, std::uint64_t seed,
         const std::string& mode, std::size_t negative_ratio, double learning_rate, double l2,
         const std::function<void(std::size_t, double)>& on_epoch) {
        Vocabulary vocab;
        TripletStore store(load_triplets(triplets_path, vocab));
        TrainConfig cfg;
        cfg.dim = dim;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        if (mode == "1n") cfg.mode = TrainMode::one_to_n;
        else if (mode == "neg") cfg.mode = TrainMode::negative_sampling;
        else throw ArgumentError("mode must be '1n' or 'neg'");
        cfg.negative_ratio = negative_ratio;
        cfg.adam.learning_rate = learning_rate;
        cfg.l2 = l2;
        EpochCallback cb;
        if (on_epoch) cb = [&](std::size_t e, double loss) {
          py::gil_scoped_acquire gil;
          on_epoch(e, loss);
        };
        py::gil_scoped_release release;
        return std::make_shared<ModelParams>(train(store, vocab, cfg, cb));
      },
      py::arg("triplets_path"), py::arg("dim") = 50, py::arg("epochs") = 100, py::arg("batch_size") = 128,
      py::arg("seed") = 0, py::arg("mode") = "1n", py::arg("negative_ratio") = 1, py::arg("learning_rate") = 1e-3,
      py::arg("l2") = 0.0, py::arg("on_epoch") = nullptr, "Train a ComplEx model on a `s<TAB>r<TAB>o` file.");

  m.def(
      "compile_axiom",
      [](const std::string& s, const std::string& r, const std::string& o) -> std::optional<std::string> {
        auto a = compile_axiom({s, relation_arg(r), o, 1.0, false});
        if (!a) return std::nullopt;
        return a->to_string();
      },
      py::arg("s"), py::arg("r"), py::arg("o"));

  m.def(
      "generate_axioms",
      [](const std::vector<std::tuple<std::string, std::string, std::string, double>>& scored, double theta) {
        std::vector<ScoredTriplet> in;
        for (const auto& [s, r, o, v] : scored) in.push_back({s, relation_arg(r), o, v, false});
        return axiom_list(generate_axioms(in, theta));
      },
      py::arg("scored"), py::arg("theta") = 0.4, "Compile (s, r, o, score) tuples scoring at least theta.");

  m.def("transitive_closure", [](const std::vector<NodeEdge>& edges) { return transitive_closure(edges); },
        py::arg("edges"));

  m.def("parse_formula", [](const std::string& text) { return parse_formula(text).to_string(); }, py::arg("text"),
        "Parse and return the canonical rendering.");

  py::class_<Scorer, std::shared_ptr<Scorer>>(m, "Scorer")
      .def("describe", &Scorer::describe)
      .def(
          "abduce",
          [](const Scorer& s, const std::vector<std::pair<std::string, std::string>>& pairs, double theta) {
            auto in = pairs_arg(pairs);
            std::vector<Axiom> out;
            {
              py::gil_scoped_release release;
              out = s.abduce(in, theta);
            }
            return axiom_list(out);
          },
          py::arg("pairs"), py::arg("theta") = 0.4);

  py::class_<TripletScorer, Scorer, std::shared_ptr<TripletScorer>>(m, "TripletScorer")
      .def(
          "score",
          [](const TripletScorer& sc, const std::string& s, const std::string& r, const std::string& o) {
            return sc.score(s, relation_arg(r), o).score;
          },
          py::arg("s"), py::arg("r"), py::arg("o"));

  py::class_<KbcScorer, TripletScorer, std::shared_ptr<KbcScorer>>(m, "KbcScorer")
      .def(py::init([](std::shared_ptr<ModelParams> p) { return std::make_shared<KbcScorer>(std::move(p)); }),
           py::arg("model"));

  py::class_<SearchScorer, TripletScorer, std::shared_ptr<SearchScorer>>(m, "SearchScorer")
      .def(py::init([](const std::string& triplets_path) {
             Vocabulary vocab;
             TripletStore store(load_triplets(triplets_path, vocab));
             return std::make_shared<SearchScorer>(store, vocab);
           }),
           py::arg("triplets_path"))
      .def_property_readonly("fact_count", &SearchScorer::fact_count);

  py::class_<RemoteScorer, Scorer, std::shared_ptr<RemoteScorer>>(m, "RemoteScorer")
      .def(py::init([](const std::string& endpoint, double timeout_sec) {
             return std::make_shared<RemoteScorer>(endpoint, std::chrono::milliseconds(static_cast<std::int64_t>(timeout_sec * 1000)));
           }),
           py::arg("endpoint"), py::arg("timeout") = 5.0);

  py::class_<ScoringServer>(m, "ScoringServer")
      .def(py::init([](std::shared_ptr<TripletScorer> scorer, double theta) {
             return std::make_unique<ScoringServer>(std::move(scorer), theta);
           }),
           py::arg("scorer"), py::arg("theta") = 0.4)
      .def("start", &ScoringServer::start, py::arg("host") = "127.0.0.1", py::arg("port") = 0,
           "Returns the bound port.")
      .def("stop", &ScoringServer::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("running", &ScoringServer::running)
      .def_property_readonly("requests_served", &ScoringServer::requests_served);

  m.def(
      "prove",
      [](const std::vector<std::string>& premises, const std::string& hypothesis, const py::object& scorer, double theta,
         int rounds, std::int64_t timeout_ms, const std::set<std::string>& roles) {
        RteProblem p;
        for (const auto& text : premises) p.premises.push_back(parse_formula(text));
        p.hypothesis = parse_formula(hypothesis);
        p.validate();
        auto sc = scorer_arg(scorer);
        const auto cfg = prove_config(theta, rounds, timeout_ms, roles);
        Decision d;
        {
          py::gil_scoped_release release;
          d = decide(p, *sc, cfg);
        }
        return decision_dict(d);
      },
      py::arg("premises"), py::arg("hypothesis"), py::arg("scorer") = py::none(), py::arg("theta") = 0.4,
      py::arg("rounds") = 1, py::arg("timeout_ms") = 100000, py::arg("role_predicates") = std::set<std::string>{});

  m.def(
      "prove_file",
      [](const std::string& path, const py::object& scorer, double theta, int rounds, std::int64_t timeout_ms,
         const std::set<std::string>& roles, std::size_t workers, bool timing) {
        auto sc = scorer_arg(scorer);
        const auto cfg = prove_config(theta, rounds, timeout_ms, roles);
        std::ostringstream out;
        {
          py::gil_scoped_release release;
          write_report(out, run_problem_file(path, *sc, cfg, workers), timing);
        }
        return out.str();
      },
      py::arg("path"), py::arg("scorer") = py::none(), py::arg("theta") = 0.4, py::arg("rounds") = 1,
      py::arg("timeout_ms") = 100000, py::arg("role_predicates") = std::set<std::string>{}, py::arg("workers") = 1,
      py::arg("timing") = true, "Decide every problem in a JSON-lines file and return the report text.");
}
