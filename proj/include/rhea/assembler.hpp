#pragma once

// Hybrid context reconstruction: instruction block first, tiered episodic
// segments in turn order, query last; then budget enforcement and rendering.

#include <optional>
#include <string>
#include <vector>

#include "rhea/codec.hpp"
#include "rhea/core.hpp"
#include "rhea/memory.hpp"

namespace rhea {

inline constexpr std::string_view kInstructionHeader = "Global instructions (apply to every reply):";
inline constexpr std::size_t kMarkerTokens = 12;

HybridContext assemble(const InstructionalMemoryStore& im, const std::vector<ScoredRecord>& scored,
                       const EpisodicMemoryStore& em, std::string_view query_text, const EngineConfig& cfg);

/// Whitespace tokens of every text segment plus budget_n per latent turn.
std::size_t context_cost(const HybridContext& ctx, const EngineConfig& cfg);

/// Demotes the oldest raw turn to a latent turn, then drops the oldest latent
/// turn, until the context fits. Throws BudgetTooSmall when instructions and
/// query alone exceed the budget.
HybridContext enforce_budget(HybridContext ctx, const EngineConfig& cfg);

struct PayloadMessage {
  std::string role;
  std::string content;
  std::optional<std::uint64_t> turn_index;  // absent on the query

  bool operator==(const PayloadMessage&) const = default;
};

struct LatentAttachment {
  std::uint64_t turn_index = 0;
  LatentMatrix latent;

  bool operator==(const LatentAttachment&) const = default;
};

struct BackendPayload {
  std::string system;
  std::vector<PayloadMessage> messages;
  std::vector<LatentAttachment> latents;

  bool operator==(const BackendPayload&) const = default;
};

BackendPayload render(const HybridContext& ctx, RenderMode mode);

/// The instruction lines of a rendered system block (header stripped).
std::vector<std::string> instruction_lines(const BackendPayload& payload);

std::string latent_marker(std::uint64_t turn_index, std::string_view user_text);

void to_json(json& j, const BackendPayload& p);
BackendPayload payload_from_json(const json& j);

}  // namespace rhea
