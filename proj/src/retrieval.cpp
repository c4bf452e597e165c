#include "rhea/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rhea {

namespace {

std::vector<double> unit_rows(const LatentMatrix& m) {
  std::vector<double> out(m.n() * m.d());
  for (std::size_t i = 0; i < m.n(); ++i) {
    const auto row = m.row(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < m.d(); ++j) out[i * m.d() + j] = row[j] * inv;
  }
  return out;
}

}  // namespace

double turn_score(const LatentMatrix& query, const LatentMatrix& record) {
  if (query.d() != record.d()) {
    throw Error(ErrorCode::DimMismatch, "query d=" + std::to_string(query.d()) +
                                            " vs record d=" + std::to_string(record.d()));
  }
  const std::size_t d = query.d();
  const auto q = unit_rows(query);
  const auto k = unit_rows(record);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < query.n(); ++i) {
    for (std::size_t j = 0; j < record.n(); ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q[i * d + c] * k[j * d + c];
      best = std::max(best, dot);
    }
  }
  return std::clamp(best, -1.0, 1.0);
}

Tier tier_of(double score, const EngineConfig& cfg) {
  if (score > cfg.tau_high) return Tier::HighResolution;
  if (score >= cfg.tau_low) return Tier::LowResolution;
  return Tier::Forget;
}

std::vector<ScoredRecord> retrieve(const LatentMatrix& query_latent, const EpisodicMemoryStore& em,
                                   const EngineConfig& cfg) {
  std::vector<ScoredRecord> out;
  out.reserve(em.size());
  for (std::size_t i = 0; i < em.size(); ++i) {
    const auto& rec = em[i];
    const double score = rec.reply_latent ? turn_score(query_latent, *rec.reply_latent) : 0.0;
    out.push_back({i, score, tier_of(score, cfg)});
  }
  return out;
}

std::vector<ScoredRecord> retrieve(std::string_view query_text, const EpisodicMemoryStore& em,
                                   const Compressor& compressor, const EngineConfig& cfg) {
  if (em.empty()) return {};
  return retrieve(compressor.compress(query_text), em, cfg);
}

}  // namespace rhea
