#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "rhea/compressor.hpp"

using namespace rhea;

namespace {

class BasisClient : public EmbeddingClient {
 public:
  explicit BasisClient(std::size_t d) : d_(d) {}
  std::vector<std::vector<float>> embed(const std::vector<std::string>& inputs) override {
    ++calls;
    std::vector<std::vector<float>> out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::vector<float> v(d_, 0.0f);
      v[i % d_] = 3.0f;
      out.push_back(v);
    }
    return out;
  }
  void set_dim(std::size_t d) { d_ = d; }
  int calls = 0;

 private:
  std::size_t d_;
};

struct Stub {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Stub() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

RetryPolicy fast_policy(int attempts) {
  RetryPolicy p;
  p.attempts = attempts;
  p.initial_backoff = std::chrono::milliseconds(1);
  p.max_backoff = std::chrono::milliseconds(2);
  p.timeout = std::chrono::milliseconds(2000);
  return p;
}

json basis_response(const json& request) {
  json data = json::array();
  const auto& input = request.at("input");
  // Reverse order to exercise index handling.
  for (std::size_t i = input.size(); i-- > 0;) {
    std::vector<float> v(input.size(), 0.0f);
    v[i] = 1.0f;
    data.push_back({{"index", i}, {"embedding", v}});
  }
  return json{{"data", data}};
}

}  // namespace

TEST_CASE("chunk_text") {
  CHECK(chunk_text("a b c d", 2) == std::vector<std::string>{"a b", "c d"});
  CHECK(chunk_text("a b c", 2) == std::vector<std::string>{"a b", "c"});
  CHECK(chunk_text("hi", 4) == std::vector<std::string>{"hi", "hi", "hi", "hi"});
  CHECK(chunk_text("", 3) == std::vector<std::string>{"", "", ""});
  CHECK(chunk_text("a b c d e", 3) == std::vector<std::string>{"a b", "c d", "e"});
  CHECK(chunk_text("a b c", 5) == std::vector<std::string>{"a", "b", "c", "c", "c"});
}

TEST_CASE("mock_compress") {
  auto zero = mock_compress("", 8, 16, 1);
  CHECK(zero.n() == 8);
  CHECK(zero.d() == 16);
  for (float v : zero.data()) CHECK(v == 0.0f);

  CHECK(mock_compress("the same text twice", 8, 16, 5) == mock_compress("the same text twice", 8, 16, 5));
  CHECK(mock_compress("alpha beta", 1, 16, 9) == mock_compress("beta alpha", 1, 16, 9));
  CHECK_FALSE(mock_compress("alpha beta gamma delta", 8, 64, 1) == mock_compress("alpha beta gamma delta", 8, 64, 2));

  auto m = mock_compress("one two three four five six seven eight nine ten", 8, 32, 0);
  for (std::size_t i = 0; i < m.n(); ++i) {
    double norm = 0;
    for (float v : m.row(i)) norm += static_cast<double>(v) * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("mock_compress rows are signed feature hashes") {
  // Independent reconstruction of one row from token_hash.
  const std::uint64_t seed = 42;
  const std::size_t d = 16;
  auto m = mock_compress("red green blue red", 1, d, seed);
  std::vector<double> expect(d, 0.0);
  for (std::string tok : {"red", "green", "blue", "red"}) {
    const auto h = token_hash(tok, seed);
    expect[h % d] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0;
  for (double v : expect) norm += v * v;
  norm = std::sqrt(norm);
  for (std::size_t c = 0; c < d; ++c) CHECK(m.row(0)[c] == doctest::Approx(expect[c] / norm).epsilon(1e-6));
}

TEST_CASE("MockCompressor reports its shape") {
  MockCompressor c(8, 64, 3);
  CHECK(c.budget_n() == 8);
  CHECK(c.dim_d() == 64);
  CHECK(c.compress("x y z") == mock_compress("x y z", 8, 64, 3));
  CHECK_THROWS_AS(MockCompressor(0, 4), Error);
}

TEST_CASE("remote_compress with a scripted client") {
  BasisClient client(8);
  auto m = remote_compress("one. two. three.", 8, client);
  CHECK(client.calls == 1);
  REQUIRE(m.n() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(m.row(i)[c] == (c == i ? 1.0f : 0.0f));
  }
}

TEST_CASE("RemoteCompressor pins the embedding width") {
  auto client = std::make_shared<BasisClient>(8);
  RemoteCompressor c(client, 4);
  CHECK(c.compress("a b c d").d() == 8);
  CHECK(c.dim_d() == 8);
  client->set_dim(6);
  try {
    c.compress("a b c d");
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("parse_embedding_response") {
  auto ok = parse_embedding_response(json::parse(R"({"data":[{"index":1,"embedding":[2]},{"index":0,"embedding":[1]}]})"), 2);
  CHECK(ok[0] == std::vector<float>{1});
  CHECK(ok[1] == std::vector<float>{2});
  CHECK_THROWS_AS(parse_embedding_response(json::parse(R"({"data":[{"index":0,"embedding":[1]}]})"), 2), Error);
  CHECK_THROWS_AS(parse_embedding_response(json::parse(R"({"data":[{"index":0,"embedding":[1]},{"index":0,"embedding":[1]}]})"), 2), Error);
  try {
    parse_embedding_response(json::parse(R"({"nope":1})"), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
}

TEST_CASE("HTTP embedding client batches, retries and gives up") {
  Stub stub;
  std::atomic<int> calls{0};
  std::atomic<int> failures_left{2};
  stub.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (failures_left > 0) {
      --failures_left;
      res.status = 503;
      return;
    }
    res.set_content(basis_response(json::parse(req.body)).dump(), "application/json");
  });
  stub.server.Post("/down", [&](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  stub.server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  stub.start();

  auto client = std::make_shared<HttpEmbeddingClient>(stub.url(), "emb", fast_policy(3));
  RemoteCompressor c(client, 8);
  auto m = c.compress("First sentence here. Second one follows. Third closes it.");
  CHECK(calls == 3);  // two 503s, then one batched call
  REQUIRE(m.n() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    double norm = 0;
    for (float v : m.row(i)) norm += static_cast<double>(v) * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
  }

  HttpEmbeddingClient down(stub.url() + "/down", "emb", fast_policy(2));
  try {
    down.embed({"x"});
    FAIL("expected BackendUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
  HttpEmbeddingClient bad(stub.url() + "/bad", "emb", fast_policy(3));
  CHECK_THROWS_AS(bad.embed({"x"}), Error);

  HttpEmbeddingClient nobody("http://127.0.0.1:1", "emb", fast_policy(2));
  CHECK_THROWS_AS(nobody.embed({"x"}), Error);
}
