#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kbcab/prover.hpp"

namespace kbcab {

struct LoadError {
  std::string id;  // "line N" when the line has no readable id
  std::string message;
};

struct ProblemSet {
  std::vector<RteProblem> problems;
  std::vector<LoadError> errors;
};

// JSON lines: {"id", "premises": [..], "hypothesis", "gold"?}. Malformed
// lines are reported in `errors` and skipped.
ProblemSet read_problems(std::istream& in);
ProblemSet load_problems(const std::string& path);

struct ProblemResult {
  std::string id;
  Decision decision;
  double millis = 0.0;
  std::optional<Label> gold;
};

struct RunSummary {
  std::size_t count = 0;
  std::size_t errors = 0;  // skipped lines
  std::size_t timeouts = 0;
  std::size_t with_gold = 0;
  // Percentages over problems with gold labels. Precision and recall treat
  // entailment/contradiction as positive predictions.
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  double macro_avg_sec = 0.0;  // mean per-problem proving time
};

struct RunReport {
  std::vector<ProblemResult> results;
  std::vector<LoadError> load_errors;
  RunSummary summary;
};

// Decides every problem; only proving time is measured. Problems may run on
// `workers` threads over the shared scorer; results keep input order.
RunReport run_problems(std::span<const RteProblem> problems, const Scorer& scorer,
                       const ProveConfig& cfg, std::size_t workers = 1);
RunReport run_problem_file(const std::string& path, const Scorer& scorer, const ProveConfig& cfg,
                           std::size_t workers = 1);

RunSummary summarize(std::span<const ProblemResult> results);

// JSON lines {"id","label","axioms_used":[{s,r,o,score}],"millis"} followed by
// a {"summary":{...}} object. Load errors appear as {"id","error"} lines.
void write_report(std::ostream& out, const RunReport& report, bool with_timing = true);

struct BenchRow {
  std::string scorer;
  std::vector<double> run_avg_sec;  // per-run macro average
  double macro_avg_sec = 0.0;       // mean over runs
  RunSummary summary;               // accuracy columns from the last run
};

BenchRow bench(std::span<const RteProblem> problems, const Scorer& scorer, const std::string& name,
               const ProveConfig& cfg, std::size_t runs, std::size_t workers = 1);

std::string bench_row_json(const BenchRow& row);

}  // namespace kbcab
