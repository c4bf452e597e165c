#pragma once

// Heuristic context retrieval: score every episodic record against the
// compressed query and assign a granularity tier.

#include <string_view>
#include <vector>

#include "rhea/compressor.hpp"
#include "rhea/core.hpp"
#include "rhea/memory.hpp"

namespace rhea {

/// Max over all row pairs of cosine(query row, record row). Rows are
/// re-normalized here; zero rows contribute 0. Throws DimMismatch when the
/// widths differ.
double turn_score(const LatentMatrix& query, const LatentMatrix& record);

/// High iff score > tau_high; Low iff tau_low <= score <= tau_high; else Forget.
Tier tier_of(double score, const EngineConfig& cfg);

/// Scores in chronological order; every tier is reported (the assembler
/// drops Forget).
std::vector<ScoredRecord> retrieve(const LatentMatrix& query_latent, const EpisodicMemoryStore& em,
                                   const EngineConfig& cfg);
std::vector<ScoredRecord> retrieve(std::string_view query_text, const EpisodicMemoryStore& em,
                                   const Compressor& compressor, const EngineConfig& cfg);

}  // namespace rhea
