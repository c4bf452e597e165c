#include "rhea/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace rhea {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ThresholdRange: return "ThresholdRange";
    case ErrorCode::ThresholdOrder: return "ThresholdOrder";
    case ErrorCode::BudgetZero: return "BudgetZero";
    case ErrorCode::BudgetMismatch: return "BudgetMismatch";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

void validate_turn(const Turn& turn) {
  if (turn.index < 1) throw Error(ErrorCode::InvalidInput, "turn index must be >= 1");
  if (turn.user_text.empty()) throw Error(ErrorCode::InvalidInput, "user_text is empty");
}

LatentMatrix::LatentMatrix(std::size_t n, std::size_t d) : n_(n), d_(d), data_(n * d, 0.0f) {
  check();
}

LatentMatrix::LatentMatrix(std::size_t n, std::size_t d, std::vector<float> data)
    : n_(n), d_(d), data_(std::move(data)) {
  check();
}

LatentMatrix LatentMatrix::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "latent matrix needs at least one row");
  const std::size_t d = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged latent rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return LatentMatrix(rows.size(), d, std::move(data));
}

void LatentMatrix::check() const {
  if (n_ < 1 || d_ < 1) throw Error(ErrorCode::InvalidInput, "latent matrix needs n >= 1 and d >= 1");
  if (data_.size() != n_ * d_) throw Error(ErrorCode::DimensionMismatch, "latent data size != n*d");
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "latent entry is not finite");
  }
}

std::span<const float> LatentMatrix::row(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * d_, d_);
}

std::span<float> LatentMatrix::row(std::size_t i) { return std::span<float>(data_).subspan(i * d_, d_); }

void validate_record(const EpisodicRecord& record) {
  validate_turn(record.turn);
  if (!record.turn.model_text.empty() && !record.reply_latent) {
    throw Error(ErrorCode::InvalidInput, "record with a reply needs a reply latent");
  }
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::HighResolution: return "HIGH";
    case Tier::LowResolution: return "LOW";
    case Tier::Forget: return "FORGET";
  }
  return "?";
}

std::optional<std::string> check_structure(const HybridContext& ctx) {
  const auto& segs = ctx.segments;
  if (segs.size() < 2) return "context needs an instruction block and a query";
  if (!std::holds_alternative<InstructionBlock>(segs.front())) return "first segment is not the instruction block";
  if (!std::holds_alternative<Query>(segs.back())) return "last segment is not the query";
  std::uint64_t last = 0;
  for (std::size_t i = 1; i + 1 < segs.size(); ++i) {
    std::uint64_t idx = 0;
    if (const auto* raw = std::get_if<RawTurn>(&segs[i])) {
      idx = raw->turn_index;
    } else if (const auto* lat = std::get_if<LatentTurn>(&segs[i])) {
      idx = lat->turn_index;
    } else {
      return "instruction block or query in the middle of the context";
    }
    if (idx <= last) return "episodic segments out of chronological order";
    last = idx;
  }
  return std::nullopt;
}

std::string_view to_string(RenderMode mode) {
  return mode == RenderMode::Hybrid ? "hybrid" : "text";
}

std::string_view to_string(RecognizerMode mode) {
  switch (mode) {
    case RecognizerMode::RulesOnly: return "rules";
    case RecognizerMode::Hybrid: return "hybrid";
    case RecognizerMode::Oracle: return "oracle";
  }
  return "?";
}

RenderMode parse_render_mode(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "hybrid") return RenderMode::Hybrid;
  if (t == "text" || t == "textonly" || t == "text-only") return RenderMode::TextOnly;
  throw Error(ErrorCode::InvalidInput, "unknown render mode: " + std::string(text));
}

RecognizerMode parse_recognizer_mode(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "rules" || t == "rulesonly" || t == "rules-only") return RecognizerMode::RulesOnly;
  if (t == "hybrid") return RecognizerMode::Hybrid;
  if (t == "oracle") return RecognizerMode::Oracle;
  throw Error(ErrorCode::InvalidInput, "unknown recognizer mode: " + std::string(text));
}

std::optional<Error> validate_config(const EngineConfig& cfg) {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(cfg.tau_low)) return Error(ErrorCode::ThresholdRange, "tau_low must lie in [0,1]");
  if (!in_unit(cfg.tau_high)) return Error(ErrorCode::ThresholdRange, "tau_high must lie in [0,1]");
  if (cfg.tau_low > cfg.tau_high) return Error(ErrorCode::ThresholdOrder, "tau_low must not exceed tau_high");
  if (cfg.budget_n == 0) return Error(ErrorCode::BudgetZero, "budget_n must be >= 1");
  if (cfg.context_token_budget == 0) return Error(ErrorCode::BudgetZero, "context_token_budget must be >= 1");
  return std::nullopt;
}

void require_valid(const EngineConfig& cfg) {
  if (auto err = validate_config(cfg)) throw *err;
}

std::string normalize_instruction(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string dedup_key(std::string_view text) { return to_lower(normalize_instruction(text)); }

std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::size_t token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

}  // namespace rhea
