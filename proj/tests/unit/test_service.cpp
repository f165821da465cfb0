#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "kbcab/error.hpp"
#include "kbcab/service.hpp"
#include "support.hpp"

using namespace kbcab;

#ifndef KBCAB_GOLDEN_DIR
#error "KBCAB_GOLDEN_DIR must point at tests/golden"
#endif

namespace {

std::vector<std::string> golden_lines(const std::string& name) {
  std::ifstream in(std::string(KBCAB_GOLDEN_DIR) + "/" + name);
  REQUIRE(in);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::shared_ptr<const KbcScorer> planted() {
  return std::make_shared<const KbcScorer>(std::make_shared<const ModelParams>(kbtest::planted_model(
      {{"hike", Relation::hypernym, "walk"}, {"parent", Relation::antonym, "child"}}, {"man"})));
}

// Minimal raw client for protocol-level checks.
class LineClient {
 public:
  explicit LineClient(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  }
  ~LineClient() { ::close(fd_); }
  void send(const std::string& text) { REQUIRE(::send(fd_, text.data(), text.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(text.size())); }
  std::string line() {
    for (;;) {
      auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string out = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return out;
      }
      char chunk[4096];
      ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return "<closed>";
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("golden requests and responses round-trip byte for byte") {
  for (const auto& line : golden_lines("requests.jsonl")) CHECK(serialize_request(parse_request(line)) == line);
  for (const auto& line : golden_lines("responses.jsonl")) CHECK(serialize_response(parse_response(line)) == line);
}

TEST_CASE("malformed protocol lines") {
  CHECK_THROWS_AS(parse_request("{\"id\":1}"), FormatError);
  CHECK_THROWS_AS(parse_request("{\"id\":\"x\",\"pairs\":[]}"), FormatError);
  CHECK_THROWS_AS(parse_request("{\"id\":1,\"pairs\":[[\"a\"]]}"), FormatError);
  CHECK_THROWS_AS(parse_request("[1]"), FormatError);
  CHECK_THROWS_AS(parse_response("{\"id\":1,\"axioms\":[{\"s\":\"a\",\"r\":\"meronym\",\"o\":\"b\",\"score\":1}]}"),
                  FormatError);
}

TEST_CASE("request handling") {
  auto s = planted();
  CHECK(handle_request_line(*s, 0.4, R"({"id":1,"pairs":[["hike","walk"]]})") ==
        R"({"id":1,"axioms":[{"s":"hike","r":"hypernym","o":"walk","score":0.952574127}]})");
  CHECK(handle_request_line(*s, 0.4, R"({"id":1,"pairs":[["hike","walk"]],"theta":1.0})") == R"({"id":1,"axioms":[]})");
  CHECK(handle_request_line(*s, 0.4, R"({"id":5,"pairs":[]})") == R"({"id":5,"error":"pairs must be nonempty"})");
  CHECK(handle_request_line(*s, 0.4, "{oops").rfind(R"({"id":-1,"error":"malformed JSON)", 0) == 0);
  CHECK(handle_request_line(*s, 0.4, R"({"id":3,"pairs":[["a","b"]],"theta":2})") ==
        R"({"id":3,"error":"theta must lie in [0, 1]"})");
  // duplicate pairs are scored once
  CHECK(handle_request_line(*s, 0.4, R"({"id":2,"pairs":[["hike","walk"],["hike","walk"]]})") ==
        R"({"id":2,"axioms":[{"s":"hike","r":"hypernym","o":"walk","score":0.952574127}]})");
}

TEST_CASE("oversized requests are refused") {
  std::string big = R"({"id":4,"pairs":[)";
  for (std::size_t i = 0; i <= kMaxPairsPerRequest; ++i) big += i ? ",[\"a\",\"b\"]" : "[\"a\",\"b\"]";
  big += "]}";
  const std::string reply = handle_request_line(*planted(), 0.4, big);
  CHECK(reply.rfind(R"({"id":4,"error":"request too large)", 0) == 0);
}

TEST_CASE("every returned score clears the threshold and results have at most ten entries") {
  auto model = std::make_shared<const ModelParams>(kbtest::random_model(12, 4, 3));
  KbcScorer s(model);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const double theta = static_cast<double>(rng() % 100) / 100.0;
    ScoreRequest req{i, {{model->vocab.entity_name(static_cast<EntityId>(rng() % 12)),
                          model->vocab.entity_name(static_cast<EntityId>(rng() % 12))}},
                     theta};
    auto resp = parse_response(handle_request_line(s, 0.4, serialize_request(req)));
    CHECK(resp.id == i);
    CHECK(resp.axioms.size() <= 10);
    for (const auto& a : resp.axioms) CHECK(a.score >= theta - 5e-10);
  }
}

TEST_CASE("server answers concurrent clients with their own ids") {
  ScoringServer server(planted(), 0.4);
  const auto port = server.start("127.0.0.1", 0);
  REQUIRE(port != 0);
  LineClient a(port), b(port);
  a.send(R"({"id":1,"pairs":[["hike","walk"]]})" "\n");
  b.send(R"({"id":100,"pairs":[["parent","child"]]})" "\n" R"({"id":101,"pairs":[]})" "\n");
  a.send("garbage\n");
  CHECK(b.line() == R"({"id":100,"axioms":[{"s":"parent","r":"antonym","o":"child","score":0.952574127}]})");
  CHECK(a.line() == R"({"id":1,"axioms":[{"s":"hike","r":"hypernym","o":"walk","score":0.952574127}]})");
  CHECK(b.line() == R"({"id":101,"error":"pairs must be nonempty"})");
  CHECK(a.line().rfind(R"({"id":-1,"error":)", 0) == 0);
  server.stop();
  CHECK(server.requests_served() == 4);
  CHECK_FALSE(server.running());
}

TEST_CASE("stop drains requests already received") {
  ScoringServer server(planted(), 0.4);
  const auto port = server.start("127.0.0.1", 0);
  LineClient c(port);
  std::string burst;
  for (int i = 0; i < 200; ++i) burst += "{\"id\":" + std::to_string(i) + ",\"pairs\":[[\"hike\",\"walk\"]]}\n";
  c.send(burst);
  CHECK(c.line().rfind("{\"id\":0,", 0) == 0);
  server.stop();
  int got = 1;
  while (c.line() != "<closed>") ++got;
  CHECK(got == 200);
}

TEST_CASE("remote scoring equals local scoring") {
  auto model = std::make_shared<const ModelParams>(kbtest::random_model(15, 6, 8));
  auto local = std::make_shared<const KbcScorer>(model);
  ScoringServer server(local, 0.4);
  const auto port = server.start("127.0.0.1", 0);
  RemoteScorer remote("127.0.0.1:" + std::to_string(port));
  CHECK(remote.describe() == "remote:127.0.0.1:" + std::to_string(port));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<CandidatePair> pairs;
    for (int k = 1 + static_cast<int>(rng() % 3); k > 0; --k)
      pairs.push_back({model->vocab.entity_name(static_cast<EntityId>(rng() % 15)),
                       i % 10 == 0 ? "unknown-lemma" : model->vocab.entity_name(static_cast<EntityId>(rng() % 15))});
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    const double theta = static_cast<double>(rng() % 10) / 10.0;
    auto want = local->abduce(pairs, theta);
    auto got = remote.abduce(pairs, theta);
    REQUIRE(got.size() == want.size());
    for (std::size_t j = 0; j < got.size(); ++j) {
      CHECK(got[j].key() == want[j].key());
      CHECK(std::abs(got[j].provenance.score - want[j].provenance.score) <= 1e-9);
    }
  }
  CHECK(remote.abduce(std::vector<CandidatePair>{{"e1", "e2"}}, 1.0).empty());
  server.stop();
}

TEST_CASE("remote scorer reconnects after a server restart") {
  auto s = planted();
  auto server = std::make_unique<ScoringServer>(s, 0.4);
  const auto port = server->start("127.0.0.1", 0);
  RemoteScorer remote("127.0.0.1:" + std::to_string(port));
  const std::vector<CandidatePair> pairs{{"hike", "walk"}};
  CHECK(remote.abduce(pairs, 0.4).size() == 1);
  server->stop();
  server = std::make_unique<ScoringServer>(s, 0.4);
  REQUIRE(server->start("127.0.0.1", port) == port);
  CHECK(remote.abduce(pairs, 0.4).size() == 1);
  server->stop();
}

TEST_CASE("dead endpoints raise remote scorer errors") {
  // bind and release a port so nothing listens there
  ScoringServer probe(planted(), 0.4);
  const auto port = probe.start("127.0.0.1", 0);
  probe.stop();
  RemoteScorer dead("127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(500));
  const std::vector<CandidatePair> pairs{{"a", "b"}};
  CHECK_THROWS_AS(dead.remote_score(pairs, 0.4), RemoteScorerError);
  CHECK_THROWS_AS(remote_score("127.0.0.1:" + std::to_string(port), pairs, 0.4), RemoteScorerError);
  CHECK_THROWS_AS(RemoteScorer("no-port"), ArgumentError);

  auto p = std::make_shared<const ModelParams>(kbtest::planted_model({{"hike", Relation::hypernym, "walk"}}, {"man"}));
  RteProblem prob;
  prob.id = "x";
  prob.premises.push_back(parse_formula("exists e x. man(x) & hike(e) & subj(e,x)"));
  prob.hypothesis = parse_formula("exists e x. man(x) & walk(e) & subj(e,x)");
  Decision d = decide(prob, dead, {});
  CHECK(d.label == Label::unknown);
  CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("server throughput on loopback") {
  ScoringServer server(planted(), 0.4);
  const auto port = server.start("127.0.0.1", 0);
  RemoteScorer remote("127.0.0.1:" + std::to_string(port));
  const std::vector<CandidatePair> pairs{{"hike", "walk"}};
  const int n = 2000;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) remote.remote_score(pairs, 0.4);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("requests/second: " << n / sec);
  CHECK(n / sec >= 1000.0);
  server.stop();
}

}  // TEST_SUITE
