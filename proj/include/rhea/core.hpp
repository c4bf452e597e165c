#pragma once

// Domain types shared by every module: turns, latent matrices, instructions,
// episodic records, tiers, hybrid contexts and engine configuration.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rhea/error.hpp"

namespace rhea {

/// One user -> model exchange. Ordering authority is `index`; `created_at`
/// (unix milliseconds) is informational.
struct Turn {
  std::uint64_t index = 0;
  std::string user_text;
  std::string model_text;
  std::int64_t created_at = 0;

  bool operator==(const Turn&) const = default;
};

void validate_turn(const Turn& turn);

/// Fixed-budget n x d matrix of compression vectors, stored row-major as
/// 32-bit floats so that the wire encoding is lossless.
class LatentMatrix {
 public:
  LatentMatrix(std::size_t n, std::size_t d);  // all zeros
  LatentMatrix(std::size_t n, std::size_t d, std::vector<float> data);
  static LatentMatrix from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  std::span<const float> row(std::size_t i) const;
  std::span<float> row(std::size_t i);
  const std::vector<float>& data() const noexcept { return data_; }

  bool operator==(const LatentMatrix&) const = default;

 private:
  void check() const;

  std::size_t n_;
  std::size_t d_;
  std::vector<float> data_;
};

enum class RecognizedBy { Rule, Classifier, Manual };

struct GlobalInstruction {
  std::string text;
  std::uint64_t source_turn = 0;
  RecognizedBy recognized_by = RecognizedBy::Rule;

  bool operator==(const GlobalInstruction&) const = default;
};

struct EpisodicRecord {
  Turn turn;
  std::optional<LatentMatrix> reply_latent;
  bool is_instruction_turn = false;

  bool operator==(const EpisodicRecord&) const = default;
};

void validate_record(const EpisodicRecord& record);

enum class Tier { Forget, LowResolution, HighResolution };

std::string_view to_string(Tier tier);

struct ScoredRecord {
  std::size_t record_index = 0;
  double score = 0.0;
  Tier tier = Tier::Forget;

  bool operator==(const ScoredRecord&) const = default;
};

// HybridContext segments.
struct InstructionBlock {
  std::vector<std::string> instructions;
  bool operator==(const InstructionBlock&) const = default;
};

struct RawTurn {
  std::uint64_t turn_index = 0;
  std::string user_text;
  std::string model_text;
  // Carried so the budget pass can demote the turn without another lookup.
  std::optional<LatentMatrix> reply_latent;
  bool operator==(const RawTurn&) const = default;
};

struct LatentTurn {
  std::uint64_t turn_index = 0;
  std::string user_text;
  LatentMatrix latent;
  bool operator==(const LatentTurn&) const = default;
};

struct Query {
  std::string user_text;
  bool operator==(const Query&) const = default;
};

using Segment = std::variant<InstructionBlock, RawTurn, LatentTurn, Query>;

struct HybridContext {
  std::vector<Segment> segments;
  std::vector<ScoredRecord> diagnostics;

  bool operator==(const HybridContext&) const = default;
};

/// Empty when the segment order is InstructionBlock, chronological episodic
/// turns, Query; otherwise a description of the first violation.
std::optional<std::string> check_structure(const HybridContext& ctx);

enum class RenderMode { Hybrid, TextOnly };
enum class RecognizerMode { RulesOnly, Hybrid, Oracle };

std::string_view to_string(RenderMode mode);
std::string_view to_string(RecognizerMode mode);
RenderMode parse_render_mode(std::string_view text);
RecognizerMode parse_recognizer_mode(std::string_view text);

struct EngineConfig {
  double tau_low = 0.5;
  double tau_high = 0.8;
  std::size_t budget_n = 8;
  RenderMode render_mode = RenderMode::Hybrid;
  RecognizerMode recognizer_mode = RecognizerMode::Hybrid;
  std::size_t context_token_budget = 65536;

  bool operator==(const EngineConfig&) const = default;
};

/// Returns the first violated invariant, if any.
std::optional<Error> validate_config(const EngineConfig& cfg);
void require_valid(const EngineConfig& cfg);

/// Trims and collapses internal whitespace; casing is preserved.
std::string normalize_instruction(std::string_view text);

/// Case-folded normalized text; two instructions are the same iff keys match.
std::string dedup_key(std::string_view text);

std::vector<std::string_view> whitespace_tokens(std::string_view text);
std::size_t token_count(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace rhea
