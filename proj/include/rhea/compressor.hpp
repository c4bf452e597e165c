#pragma once

// Text -> fixed-budget LatentMatrix. Implementations must be deterministic
// and safe to call concurrently.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rhea/core.hpp"
#include "rhea/http_json.hpp"

namespace rhea {

class Compressor {
 public:
  virtual ~Compressor() = default;
  virtual std::size_t budget_n() const = 0;
  virtual std::size_t dim_d() const = 0;
  virtual LatentMatrix compress(std::string_view text) const = 0;
};

/// Splits whitespace tokens into n contiguous, near-equal chunks (earlier
/// chunks take the remainder). Short texts repeat their last non-empty chunk.
std::vector<std::string> chunk_text(std::string_view text, std::size_t n);

/// Stable 64-bit token hash (FNV-1a folded through a splitmix finalizer).
std::uint64_t token_hash(std::string_view token, std::uint64_t seed);

/// Signed feature hashing of each chunk into d buckets, rows L2-normalized.
LatentMatrix mock_compress(std::string_view text, std::size_t n, std::size_t d, std::uint64_t seed);

class MockCompressor : public Compressor {
 public:
  MockCompressor(std::size_t n, std::size_t d, std::uint64_t seed = 0);
  std::size_t budget_n() const override { return n_; }
  std::size_t dim_d() const override { return d_; }
  LatentMatrix compress(std::string_view text) const override;

 private:
  std::size_t n_;
  std::size_t d_;
  std::uint64_t seed_;
};

/// Batched embedding service.
class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  /// One vector per input, in input order.
  virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& inputs) = 0;
};

/// POST {model, input:[...]} -> {data:[{index, embedding}]}; order restored by index.
class HttpEmbeddingClient : public EmbeddingClient {
 public:
  HttpEmbeddingClient(std::string url, std::string model, RetryPolicy policy = {});
  std::vector<std::vector<float>> embed(const std::vector<std::string>& inputs) override;

 private:
  Endpoint endpoint_;
  std::string model_;
  RetryPolicy policy_;
};

/// Parses an embedding-service response for `expected` inputs.
std::vector<std::vector<float>> parse_embedding_response(const json& response, std::size_t expected);

/// One batched call for the n chunks, each vector L2-normalized.
LatentMatrix remote_compress(std::string_view text, std::size_t n, EmbeddingClient& client);

class RemoteCompressor : public Compressor {
 public:
  /// `d` is learned from the first response when zero.
  RemoteCompressor(std::shared_ptr<EmbeddingClient> client, std::size_t n, std::size_t d = 0);
  std::size_t budget_n() const override { return n_; }
  std::size_t dim_d() const override { return d_.load(); }
  LatentMatrix compress(std::string_view text) const override;

 private:
  std::shared_ptr<EmbeddingClient> client_;
  std::size_t n_;
  mutable std::atomic<std::size_t> d_;
};

/// Scales each row to unit L2 norm; zero rows stay zero.
void normalize_rows(LatentMatrix& m);

}  // namespace rhea
