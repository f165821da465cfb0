#include "kbcab/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <json.hpp>
#include <ostream>
#include <set>

#include "kbcab/error.hpp"

namespace kbcab {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLineBytes = std::size_t{1} << 28;

std::string fixed9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", x);
  return buf;
}

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string error_line(std::int64_t id, const std::string& message) {
  ScoreResponse r;
  r.id = id;
  r.error = message;
  return serialize_response(r);
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

std::string serialize_request(const ScoreRequest& req) {
  std::string out = "{\"id\":" + std::to_string(req.id) + ",\"pairs\":[";
  for (std::size_t i = 0; i < req.pairs.size(); ++i) {
    if (i) out += ',';
    out += '[' + quoted(req.pairs[i].context_pred) + ',' + quoted(req.pairs[i].goal_pred) + ']';
  }
  out += ']';
  if (req.theta) out += ",\"theta\":" + fixed9(*req.theta);
  out += '}';
  return out;
}

std::string serialize_response(const ScoreResponse& resp) {
  std::string out = "{\"id\":" + std::to_string(resp.id);
  if (resp.error) return out + ",\"error\":" + quoted(*resp.error) + '}';
  out += ",\"axioms\":[";
  for (std::size_t i = 0; i < resp.axioms.size(); ++i) {
    const ScoredTriplet& t = resp.axioms[i];
    if (i) out += ',';
    out += "{\"s\":" + quoted(t.s) + ",\"r\":" + quoted(std::string(relation_name(t.r))) +
           ",\"o\":" + quoted(t.o) + ",\"score\":" + fixed9(t.score) + '}';
  }
  return out + "]}";
}

ScoreRequest parse_request(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("request must be a JSON object");
  ScoreRequest req;
  if (!j.contains("id") || !j["id"].is_number_integer()) throw FormatError("request needs an integer id");
  req.id = j["id"].get<std::int64_t>();
  if (!j.contains("pairs") || !j["pairs"].is_array()) throw FormatError("request needs a pairs array");
  for (const auto& p : j["pairs"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
      throw FormatError("each pair must be [string, string]");
    req.pairs.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
  }
  if (j.contains("theta") && !j["theta"].is_null()) {
    if (!j["theta"].is_number()) throw FormatError("theta must be a number");
    req.theta = j["theta"].get<double>();
  }
  return req;
}

ScoreResponse parse_response(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  ScoreResponse resp;
  try {
    resp.id = j.at("id").get<std::int64_t>();
    if (j.contains("error")) {
      resp.error = j["error"].get<std::string>();
      return resp;
    }
    for (const auto& a : j.at("axioms")) {
      auto rel = parse_relation(a.at("r").get<std::string>());
      if (!rel) throw FormatError("unknown relation in response: " + a.at("r").get<std::string>());
      resp.axioms.push_back(
          {a.at("s").get<std::string>(), *rel, a.at("o").get<std::string>(), a.at("score").get<double>(), false});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed response: ") + e.what());
  }
  return resp;
}

std::string handle_request_line(const TripletScorer& scorer, double theta_default,
                                std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    return error_line(-1, std::string("malformed JSON: ") + e.what());
  }
  std::int64_t id = -1;
  if (j.is_object() && j.contains("id") && j["id"].is_number_integer()) id = j["id"].get<std::int64_t>();
  ScoreRequest req;
  try {
    if (j.is_object() && j.contains("pairs") && j["pairs"].is_array() &&
        j["pairs"].size() > kMaxPairsPerRequest)
      return error_line(id, "request too large: more than " + std::to_string(kMaxPairsPerRequest) + " pairs");
    req = parse_request(line);
  } catch (const FormatError& e) {
    return error_line(id, e.what());
  }
  if (req.pairs.empty()) return error_line(id, "pairs must be nonempty");
  const double theta = req.theta.value_or(theta_default);
  if (!(theta >= 0.0 && theta <= 1.0)) return error_line(id, "theta must lie in [0, 1]");

  std::vector<CandidatePair> pairs;
  std::set<CandidatePair> seen;
  for (auto& p : req.pairs) {
    if (p.context_pred.empty() || p.goal_pred.empty()) return error_line(id, "empty lemma in pair");
    if (seen.insert(p).second) pairs.push_back(std::move(p));
  }
  ScoreResponse resp;
  resp.id = id;
  auto scored = score_pairs(scorer, pairs);
  for (const Axiom& a : generate_axioms(scored, theta)) resp.axioms.push_back(a.provenance);
  return serialize_response(resp);
}

// ---- server ----------------------------------------------------------------

ScoringServer::ScoringServer(std::shared_ptr<const TripletScorer> scorer, double theta_default,
                             std::ostream* log)
    : scorer_(std::move(scorer)), theta_default_(theta_default), log_(log) {
  if (!scorer_) throw ArgumentError("server needs a scorer");
  if (!(theta_default >= 0.0 && theta_default <= 1.0)) throw ArgumentError("theta must lie in [0, 1]");
}

ScoringServer::~ScoringServer() { stop(); }

std::uint16_t ScoringServer::start(const std::string& host, std::uint16_t port) {
  if (running_) throw ArgumentError("server already running");
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(port);
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_text.c_str(), &hints, &res))
    throw ArgumentError("cannot resolve " + host + ": " + gai_strerror(rc));
  int fd = -1;
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw ArgumentError("cannot bind " + host + ":" + port_text + ": " + last_error);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  std::uint16_t bound = port;
  if (addr.ss_family == AF_INET)
    bound = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  else if (addr.ss_family == AF_INET6)
    bound = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);

  listen_fd_ = fd;
  stopping_ = false;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  log_line("listening on " + host + ":" + std::to_string(bound));
  return bound;
}

void ScoringServer::stop() {
  if (!running_) return;
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  running_ = false;
}

void ScoringServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc <= 0 || !(p.revents & POLLIN)) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(workers_mutex_);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void ScoringServer::serve_connection(int fd) {
  std::string buffer;
  char chunk[65536];
  bool open = true;
  while (open) {
    // answer every complete line already received, even while stopping
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto start = std::chrono::steady_clock::now();
      std::string reply = handle_request_line(*scorer_, theta_default_, line);
      reply += '\n';
      if (!send_all(fd, reply)) {
        open = false;
        break;
      }
      ++served_;
      if (log_) {
        const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
        log_line("request served in " + std::to_string(static_cast<long long>(us)) + " us");
      }
    }
    if (!open) break;
    if (stopping_) {
      // pick up bytes the client already sent, then answer them and close
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, MSG_DONTWAIT);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (buffer.size() > kMaxLineBytes) {
      send_all(fd, error_line(-1, "request line too long") + "\n");
      break;
    }
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  ::close(fd);
}

void ScoringServer::log_line(const std::string& line) {
  if (!log_) return;
  std::lock_guard lock(log_mutex_);
  *log_ << "[serve] " << line << '\n';
}

// ---- client ----------------------------------------------------------------

RemoteScorer::RemoteScorer(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  const auto colon = endpoint_.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint_.size())
    throw ArgumentError("remote endpoint must be host:port, got '" + endpoint_ + "'");
  host_ = endpoint_.substr(0, colon);
  port_ = endpoint_.substr(colon + 1);
  if (host_.size() > 2 && host_.front() == '[' && host_.back() == ']') host_ = host_.substr(1, host_.size() - 2);
}

RemoteScorer::~RemoteScorer() {
  std::lock_guard lock(mutex_);
  close_locked();
}

void RemoteScorer::close_locked() const {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

void RemoteScorer::connect_locked() const {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host_.c_str(), port_.c_str(), &hints, &res))
    throw RemoteScorerError("cannot resolve " + endpoint_ + ": " + gai_strerror(rc));
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout_.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout_.count() % 1000) * 1000);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw RemoteScorerError("cannot connect to " + endpoint_ + ": " + last_error);
}

std::vector<ScoredTriplet> RemoteScorer::remote_score(std::span<const CandidatePair> pairs,
                                                      double theta) const {
  if (pairs.empty()) return {};
  std::lock_guard lock(mutex_);
  ScoreRequest req;
  req.id = next_id_++;
  req.pairs.assign(pairs.begin(), pairs.end());
  req.theta = theta;
  const std::string line = serialize_request(req) + "\n";

  // one retry on a dropped connection
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (fd_ < 0) connect_locked();
    if (!send_all(fd_, line)) {
      close_locked();
      continue;
    }
    std::size_t nl;
    bool dropped = false;
    char chunk[65536];
    while ((nl = buffer_.find('\n')) == std::string::npos) {
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n > 0) {
        buffer_.append(chunk, static_cast<std::size_t>(n));
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        close_locked();
        throw RemoteScorerError("timed out waiting for " + endpoint_);
      }
      dropped = true;
      break;
    }
    if (dropped) {
      close_locked();
      if (attempt == 0) continue;
      throw RemoteScorerError("connection to " + endpoint_ + " closed");
    }
    const std::string reply = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);
    ScoreResponse resp;
    try {
      resp = parse_response(reply);
    } catch (const FormatError& e) {
      close_locked();
      throw RemoteScorerError(std::string("bad response from ") + endpoint_ + ": " + e.what());
    }
    if (resp.error) throw RemoteScorerError("server error: " + *resp.error);
    if (resp.id != req.id) {
      close_locked();
      throw RemoteScorerError("response id " + std::to_string(resp.id) + " does not match request " +
                              std::to_string(req.id));
    }
    return std::move(resp.axioms);
  }
  throw RemoteScorerError("cannot send to " + endpoint_);
}

std::vector<Axiom> RemoteScorer::abduce(std::span<const CandidatePair> pairs, double theta) const {
  // the server already applied theta; recompiling with 0 keeps rounded scores
  auto triplets = remote_score(pairs, theta);
  return generate_axioms(triplets, 0.0);
}

std::vector<ScoredTriplet> remote_score(const std::string& endpoint,
                                        std::span<const CandidatePair> pairs, double theta) {
  return RemoteScorer(endpoint).remote_score(pairs, theta);
}

}  // namespace kbcab
