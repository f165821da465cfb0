#include "kbcab/rte.hpp"

#include <atomic>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <thread>

#include "kbcab/error.hpp"

namespace kbcab {

using nlohmann::json;
using nlohmann::ordered_json;

ProblemSet read_problems(std::istream& in) {
  ProblemSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id = "line " + std::to_string(lineno);
    try {
      json obj = json::parse(line);
      if (obj.contains("id") && obj["id"].is_string()) id = obj["id"].get<std::string>();
      RteProblem p;
      p.id = obj.at("id").get<std::string>();
      for (const auto& text : obj.at("premises"))
        p.premises.push_back(parse_formula(text.get<std::string>()));
      p.hypothesis = parse_formula(obj.at("hypothesis").get<std::string>());
      if (obj.contains("gold") && !obj["gold"].is_null()) {
        auto gold = parse_label(obj["gold"].get<std::string>());
        if (!gold) throw FormatError("unknown gold label '" + obj["gold"].get<std::string>() + "'");
        p.gold = *gold;
      }
      p.validate();
      set.problems.push_back(std::move(p));
    } catch (const json::exception& e) {
      set.errors.push_back({id, std::string("malformed problem: ") + e.what()});
    } catch (const SyntaxError& e) {
      set.errors.push_back({id, std::string("formula syntax: ") + e.what()});
    } catch (const FormatError& e) {
      set.errors.push_back({id, e.what()});
    }
  }
  return set;
}

ProblemSet load_problems(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open problem file " + path);
  return read_problems(in);
}

RunSummary summarize(std::span<const ProblemResult> results) {
  RunSummary s;
  s.count = results.size();
  std::size_t correct = 0, predicted_pos = 0, correct_pos = 0, gold_pos = 0;
  double total_ms = 0.0;
  for (const auto& r : results) {
    total_ms += r.millis;
    s.timeouts += r.decision.timed_out;
    if (!r.gold) continue;
    ++s.with_gold;
    const bool positive = r.decision.label != Label::unknown;
    correct += r.decision.label == *r.gold;
    predicted_pos += positive;
    gold_pos += *r.gold != Label::unknown;
    correct_pos += positive && r.decision.label == *r.gold;
  }
  if (s.count) s.macro_avg_sec = total_ms / 1000.0 / static_cast<double>(s.count);
  if (s.with_gold) {
    s.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(s.with_gold);
    s.precision = predicted_pos ? 100.0 * static_cast<double>(correct_pos) / static_cast<double>(predicted_pos) : 0.0;
    s.recall = gold_pos ? 100.0 * static_cast<double>(correct_pos) / static_cast<double>(gold_pos) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  return s;
}

RunReport run_problems(std::span<const RteProblem> problems, const Scorer& scorer,
                       const ProveConfig& cfg, std::size_t workers) {
  cfg.validate();
  RunReport report;
  report.results.resize(problems.size());
  auto run_one = [&](std::size_t i) {
    const auto start = Clock::now();
    Decision d = decide(problems[i], scorer, cfg);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    report.results[i] = {problems[i].id, std::move(d), ms, problems[i].gold};
  };
  workers = std::max<std::size_t>(1, std::min(workers, problems.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < problems.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < problems.size(); i = next++) run_one(i);
      });
    for (auto& t : pool) t.join();
  }
  report.summary = summarize(report.results);
  return report;
}

RunReport run_problem_file(const std::string& path, const Scorer& scorer, const ProveConfig& cfg,
                           std::size_t workers) {
  ProblemSet set = load_problems(path);
  RunReport report = run_problems(set.problems, scorer, cfg, workers);
  report.load_errors = std::move(set.errors);
  report.summary.errors = report.load_errors.size();
  return report;
}

namespace {

ordered_json triplet_json(const ScoredTriplet& t) {
  ordered_json j;
  j["s"] = t.s;
  j["r"] = std::string(relation_name(t.r));
  j["o"] = t.o;
  j["score"] = t.score;
  return j;
}

ordered_json summary_json(const RunSummary& s, bool with_timing) {
  ordered_json j;
  j["count"] = s.count;
  j["errors"] = s.errors;
  j["timeouts"] = s.timeouts;
  if (s.with_gold) {
    j["accuracy"] = s.accuracy;
    j["precision"] = s.precision;
    j["recall"] = s.recall;
    j["f1"] = s.f1;
  }
  if (with_timing) j["macro_avg_sec"] = s.macro_avg_sec;
  return j;
}

}  // namespace

void write_report(std::ostream& out, const RunReport& report, bool with_timing) {
  for (const auto& e : report.load_errors) {
    ordered_json j;
    j["id"] = e.id;
    j["error"] = e.message;
    out << j.dump() << '\n';
  }
  for (const auto& r : report.results) {
    ordered_json j;
    j["id"] = r.id;
    j["label"] = std::string(label_name(r.decision.label));
    j["axioms_used"] = ordered_json::array();
    for (const Axiom& a : r.decision.axioms_used) j["axioms_used"].push_back(triplet_json(a.provenance));
    if (with_timing) j["millis"] = r.millis;
    if (!r.decision.error.empty()) j["error"] = r.decision.error;
    if (r.decision.timed_out) j["timeout"] = true;
    if (!r.decision.warnings.empty()) j["warnings"] = r.decision.warnings;
    out << j.dump() << '\n';
  }
  ordered_json summary;
  summary["summary"] = summary_json(report.summary, with_timing);
  out << summary.dump() << '\n';
}

BenchRow bench(std::span<const RteProblem> problems, const Scorer& scorer, const std::string& name,
               const ProveConfig& cfg, std::size_t runs, std::size_t workers) {
  if (runs < 1) throw ArgumentError("bench needs at least one run");
  BenchRow row;
  row.scorer = name;
  for (std::size_t k = 0; k < runs; ++k) {
    RunReport report = run_problems(problems, scorer, cfg, workers);
    row.run_avg_sec.push_back(report.summary.macro_avg_sec);
    row.summary = report.summary;
  }
  double total = 0.0;
  for (double t : row.run_avg_sec) total += t;
  row.macro_avg_sec = total / static_cast<double>(runs);
  return row;
}

std::string bench_row_json(const BenchRow& row) {
  ordered_json j;
  j["scorer"] = row.scorer;
  j["runs_sec"] = row.run_avg_sec;
  j["macro_avg_sec"] = row.macro_avg_sec;
  j["problems"] = row.summary.count;
  if (row.summary.with_gold) {
    j["accuracy"] = row.summary.accuracy;
    j["precision"] = row.summary.precision;
    j["recall"] = row.summary.recall;
    j["f1"] = row.summary.f1;
  }
  return j.dump();
}

}  // namespace kbcab
