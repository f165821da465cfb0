#pragma once

#include <stdexcept>
#include <string>

namespace kbcab {

// Bad caller-supplied values (ids out of range, k > n, zero dims, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input files: checkpoints, TSV, problem files.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradients during optimization.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Formula syntax errors carry a 1-based line/column.
struct SyntaxError : std::runtime_error {
  SyntaxError(const std::string& msg, int line, int column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line(line),
        column(column) {}
  int line;
  int column;
};

// Formula outside the supported proof fragment.
struct UnsupportedFragment : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Remote scorer unreachable, timed out, or answered with an error.
struct RemoteScorerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kbcab
