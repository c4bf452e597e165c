#include "rhea/compressor.hpp"

#include <cmath>

namespace rhea {

std::vector<std::string> chunk_text(std::string_view text, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::BudgetZero, "chunk count must be >= 1");
  const auto tokens = whitespace_tokens(text);
  std::vector<std::string> chunks(n);
  if (tokens.empty()) return chunks;

  const std::size_t used = std::min(n, tokens.size());
  const std::size_t base = tokens.size() / used;
  const std::size_t extra = tokens.size() % used;
  std::size_t t = 0;
  for (std::size_t c = 0; c < used; ++c) {
    const std::size_t size = base + (c < extra ? 1 : 0);
    std::string chunk;
    for (std::size_t k = 0; k < size; ++k, ++t) {
      if (!chunk.empty()) chunk.push_back(' ');
      chunk.append(tokens[t]);
    }
    chunks[c] = std::move(chunk);
  }
  for (std::size_t c = used; c < n; ++c) chunks[c] = chunks[used - 1];
  return chunks;
}

std::uint64_t token_hash(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

void normalize_rows(LatentMatrix& m) {
  for (std::size_t i = 0; i < m.n(); ++i) {
    auto row = m.row(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : row) v = static_cast<float>(v * inv);
  }
}

LatentMatrix mock_compress(std::string_view text, std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw Error(ErrorCode::InvalidInput, "mock_compress needs n, d >= 1");
  const auto chunks = chunk_text(text, n);
  std::vector<float> data(n * d, 0.0f);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (auto tok : whitespace_tokens(chunks[i])) {
      const auto h = token_hash(tok, seed);
      acc[h % d] += (h >> 63) ? -1.0 : 1.0;
    }
    double sq = 0.0;
    for (double v : acc) sq += v * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < d; ++j) data[i * d + j] = static_cast<float>(acc[j] * inv);
  }
  return LatentMatrix(n, d, std::move(data));
}

MockCompressor::MockCompressor(std::size_t n, std::size_t d, std::uint64_t seed) : n_(n), d_(d), seed_(seed) {
  if (n == 0 || d == 0) throw Error(ErrorCode::InvalidInput, "compressor needs n, d >= 1");
}

LatentMatrix MockCompressor::compress(std::string_view text) const { return mock_compress(text, n_, d_, seed_); }

HttpEmbeddingClient::HttpEmbeddingClient(std::string url, std::string model, RetryPolicy policy)
    : endpoint_(parse_endpoint(url, "/embed")), model_(std::move(model)), policy_(policy) {}

std::vector<std::vector<float>> parse_embedding_response(const json& response, std::size_t expected) {
  std::vector<std::vector<float>> out(expected);
  std::vector<bool> seen(expected, false);
  try {
    const auto& data = response.at("data");
    if (!data.is_array() || data.size() != expected) {
      throw Error(ErrorCode::DimensionMismatch, "embedding service returned " + std::to_string(data.size()) +
                                                    " vectors for " + std::to_string(expected) + " inputs");
    }
    for (const auto& item : data) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= expected || seen[index]) throw Error(ErrorCode::DimensionMismatch, "bad embedding index");
      seen[index] = true;
      out[index] = item.at("embedding").get<std::vector<float>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("malformed embedding response: ") + e.what());
  }
  return out;
}

std::vector<std::vector<float>> HttpEmbeddingClient::embed(const std::vector<std::string>& inputs) {
  json body{{"model", model_}, {"input", inputs}};
  return parse_embedding_response(post_json(endpoint_, body, policy_), inputs.size());
}

LatentMatrix remote_compress(std::string_view text, std::size_t n, EmbeddingClient& client) {
  const auto chunks = chunk_text(text, n);
  const auto vectors = client.embed(chunks);
  if (vectors.size() != n) throw Error(ErrorCode::DimensionMismatch, "embedding count differs from budget n");
  const std::size_t d = vectors.front().size();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "embedding service returned empty vectors");
  for (const auto& v : vectors) {
    if (v.size() != d) throw Error(ErrorCode::DimensionMismatch, "embedding service returned inconsistent d");
  }
  auto m = LatentMatrix::from_rows(vectors);
  normalize_rows(m);
  return m;
}

RemoteCompressor::RemoteCompressor(std::shared_ptr<EmbeddingClient> client, std::size_t n, std::size_t d)
    : client_(std::move(client)), n_(n), d_(d) {
  if (!client_) throw Error(ErrorCode::InvalidInput, "remote compressor needs a client");
  if (n == 0) throw Error(ErrorCode::BudgetZero, "budget n must be >= 1");
}

LatentMatrix RemoteCompressor::compress(std::string_view text) const {
  auto m = remote_compress(text, n_, *client_);
  std::size_t expected = 0;
  if (!d_.compare_exchange_strong(expected, m.d()) && expected != m.d()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding dimension changed from " + std::to_string(expected) +
                                                  " to " + std::to_string(m.d()));
  }
  return m;
}

}  // namespace rhea
