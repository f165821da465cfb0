#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "kbcab/abduction.hpp"

namespace kbcab {

inline constexpr std::size_t kMaxPairsPerRequest = 1'000'000;

struct ScoreRequest {
  std::int64_t id = 0;
  std::vector<CandidatePair> pairs;
  std::optional<double> theta;

  bool operator==(const ScoreRequest&) const = default;
};

struct ScoreResponse {
  std::int64_t id = 0;
  std::vector<ScoredTriplet> axioms;
  std::optional<std::string> error;

  bool operator==(const ScoreResponse&) const = default;
};

// One JSON object per line, no trailing newline. Scores and theta are written
// with 9 decimal digits.
//   request:  {"id":1,"pairs":[["hike","walk"]],"theta":0.400000000}
//   success:  {"id":1,"axioms":[{"s":"hike","r":"hypernym","o":"walk","score":0.952574127}]}
//   failure:  {"id":-1,"error":"..."}
std::string serialize_request(const ScoreRequest& req);
std::string serialize_response(const ScoreResponse& resp);
// Throw FormatError on malformed input.
ScoreRequest parse_request(std::string_view line);
ScoreResponse parse_response(std::string_view line);

// Server-side handling of one request line: scores every pair, compiles
// axioms above the effective threshold and returns the response line.
std::string handle_request_line(const TripletScorer& scorer, double theta_default,
                                std::string_view line);

// Newline-delimited JSON over TCP, one thread per connection, shared
// immutable scorer.
class ScoringServer {
 public:
  ScoringServer(std::shared_ptr<const TripletScorer> scorer, double theta_default,
                std::ostream* log = nullptr);
  ~ScoringServer();
  ScoringServer(const ScoringServer&) = delete;
  ScoringServer& operator=(const ScoringServer&) = delete;

  // Binds and starts accepting; returns the bound port (useful with port 0).
  std::uint16_t start(const std::string& host, std::uint16_t port);
  // Stops accepting, lets connections finish the requests they have already
  // received, and joins every thread.
  void stop();
  bool running() const { return running_; }
  std::uint64_t requests_served() const { return served_; }

 private:
  void accept_loop();
  void serve_connection(int fd);
  void log_line(const std::string& line);

  std::shared_ptr<const TripletScorer> scorer_;
  double theta_default_;
  std::ostream* log_;
  std::mutex log_mutex_;

  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread acceptor_;
  std::mutex workers_mutex_;
  std::list<std::thread> workers_;
};

// Client side of the scoring service. Keeps one connection open; safe to
// share between threads (requests are serialized).
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(std::string endpoint,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~RemoteScorer() override;

  // Throws RemoteScorerError when the server is unreachable, times out or
  // answers with an error.
  std::vector<ScoredTriplet> remote_score(std::span<const CandidatePair> pairs, double theta) const;
  std::vector<Axiom> abduce(std::span<const CandidatePair> pairs, double theta) const override;
  std::string describe() const override { return "remote:" + endpoint_; }

 private:
  void connect_locked() const;
  void close_locked() const;

  std::string endpoint_;
  std::string host_;
  std::string port_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  mutable int fd_ = -1;
  mutable std::int64_t next_id_ = 1;
  mutable std::string buffer_;
};

std::vector<ScoredTriplet> remote_score(const std::string& endpoint,
                                        std::span<const CandidatePair> pairs, double theta);

}  // namespace kbcab
