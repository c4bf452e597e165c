#pragma once

// JSON encoding of the core types. Latent matrices travel as base64 of
// little-endian float32 with explicit n and d.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rhea/core.hpp"

namespace rhea {

using json = nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error(InvalidInput) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string latent_to_base64(const LatentMatrix& m);
LatentMatrix latent_from_base64(std::size_t n, std::size_t d, std::string_view b64);

void to_json(json& j, const Turn& t);
void from_json(const json& j, Turn& t);
void to_json(json& j, const GlobalInstruction& g);
void from_json(const json& j, GlobalInstruction& g);
void to_json(json& j, const EpisodicRecord& r);
void from_json(const json& j, EpisodicRecord& r);
void to_json(json& j, const ScoredRecord& s);
void from_json(const json& j, ScoredRecord& s);
void to_json(json& j, const EngineConfig& c);
void from_json(const json& j, EngineConfig& c);
void to_json(json& j, const HybridContext& ctx);
HybridContext hybrid_context_from_json(const json& j);

std::string_view to_string(RecognizedBy by);
RecognizedBy parse_recognized_by(std::string_view text);
Tier parse_tier(std::string_view text);

}  // namespace rhea

namespace nlohmann {

template <>
struct adl_serializer<rhea::LatentMatrix> {
  static void to_json(json& j, const rhea::LatentMatrix& m);
  static rhea::LatentMatrix from_json(const json& j);
};

}  // namespace nlohmann
