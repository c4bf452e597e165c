#include "rhea/codec.hpp"

#include <array>
#include <bit>

namespace rhea {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::InvalidInput, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    std::uint32_t v = bytes[i] << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::InvalidInput, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw Error(ErrorCode::InvalidInput, "misplaced base64 padding");
        ++pad;
        q[k] = 0;
        continue;
      }
      if (pad > 0) throw Error(ErrorCode::InvalidInput, "misplaced base64 padding");
      q[k] = decode_char(c);
      if (q[k] < 0) throw Error(ErrorCode::InvalidInput, "invalid base64 character");
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string latent_to_base64(const LatentMatrix& m) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(m.data().size() * 4);
  for (float f : m.data()) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    bytes.push_back(static_cast<std::uint8_t>(u));
    bytes.push_back(static_cast<std::uint8_t>(u >> 8));
    bytes.push_back(static_cast<std::uint8_t>(u >> 16));
    bytes.push_back(static_cast<std::uint8_t>(u >> 24));
  }
  return base64_encode(bytes);
}

LatentMatrix latent_from_base64(std::size_t n, std::size_t d, std::string_view b64) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() != n * d * 4) {
    throw Error(ErrorCode::DimensionMismatch, "latent payload does not hold n*d float32 values");
  }
  std::vector<float> data(n * d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * i]) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    data[i] = std::bit_cast<float>(u);
  }
  return LatentMatrix(n, d, std::move(data));
}

std::string_view to_string(RecognizedBy by) {
  switch (by) {
    case RecognizedBy::Rule: return "rule";
    case RecognizedBy::Classifier: return "classifier";
    case RecognizedBy::Manual: return "manual";
  }
  return "?";
}

RecognizedBy parse_recognized_by(std::string_view text) {
  if (text == "rule") return RecognizedBy::Rule;
  if (text == "classifier") return RecognizedBy::Classifier;
  if (text == "manual") return RecognizedBy::Manual;
  throw Error(ErrorCode::InvalidInput, "unknown recognized_by: " + std::string(text));
}

Tier parse_tier(std::string_view text) {
  if (text == "HIGH") return Tier::HighResolution;
  if (text == "LOW") return Tier::LowResolution;
  if (text == "FORGET") return Tier::Forget;
  throw Error(ErrorCode::InvalidInput, "unknown tier: " + std::string(text));
}

void to_json(json& j, const Turn& t) {
  j = json{{"index", t.index}, {"user_text", t.user_text}, {"model_text", t.model_text}, {"created_at", t.created_at}};
}

void from_json(const json& j, Turn& t) {
  t.index = require<std::uint64_t>(j, "index");
  t.user_text = require<std::string>(j, "user_text");
  t.model_text = require<std::string>(j, "model_text");
  t.created_at = require<std::int64_t>(j, "created_at");
  validate_turn(t);
}

void to_json(json& j, const GlobalInstruction& g) {
  j = json{{"text", g.text}, {"source_turn", g.source_turn}, {"recognized_by", to_string(g.recognized_by)}};
}

void from_json(const json& j, GlobalInstruction& g) {
  g.text = require<std::string>(j, "text");
  g.source_turn = require<std::uint64_t>(j, "source_turn");
  g.recognized_by = parse_recognized_by(require<std::string>(j, "recognized_by"));
  if (normalize_instruction(g.text).empty()) throw Error(ErrorCode::InvalidInput, "empty instruction text");
}

void to_json(json& j, const EpisodicRecord& r) {
  j = json{{"turn", r.turn}, {"is_instruction_turn", r.is_instruction_turn}};
  j["reply_latent"] = r.reply_latent ? json(*r.reply_latent) : json(nullptr);
}

void from_json(const json& j, EpisodicRecord& r) {
  r.turn = require<Turn>(j, "turn");
  r.is_instruction_turn = require<bool>(j, "is_instruction_turn");
  if (j.contains("reply_latent") && !j.at("reply_latent").is_null()) {
    r.reply_latent = nlohmann::adl_serializer<LatentMatrix>::from_json(j.at("reply_latent"));
  } else {
    r.reply_latent.reset();
  }
  validate_record(r);
}

void to_json(json& j, const ScoredRecord& s) {
  j = json{{"record_index", s.record_index}, {"score", s.score}, {"tier", to_string(s.tier)}};
}

void from_json(const json& j, ScoredRecord& s) {
  s.record_index = require<std::size_t>(j, "record_index");
  s.score = require<double>(j, "score");
  s.tier = parse_tier(require<std::string>(j, "tier"));
}

void to_json(json& j, const EngineConfig& c) {
  j = json{{"tau_low", c.tau_low},
           {"tau_high", c.tau_high},
           {"budget_n", c.budget_n},
           {"render_mode", to_string(c.render_mode)},
           {"recognizer_mode", to_string(c.recognizer_mode)},
           {"context_token_budget", c.context_token_budget}};
}

// Missing keys keep their current value so partial config files work.
void from_json(const json& j, EngineConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "engine config must be an object");
  try {
    if (j.contains("tau_low")) c.tau_low = j.at("tau_low").get<double>();
    if (j.contains("tau_high")) c.tau_high = j.at("tau_high").get<double>();
    if (j.contains("budget_n")) c.budget_n = j.at("budget_n").get<std::size_t>();
    if (j.contains("render_mode")) c.render_mode = parse_render_mode(j.at("render_mode").get<std::string>());
    if (j.contains("recognizer_mode")) {
      c.recognizer_mode = parse_recognizer_mode(j.at("recognizer_mode").get<std::string>());
    }
    if (j.contains("context_token_budget")) c.context_token_budget = j.at("context_token_budget").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad engine config: ") + e.what());
  }
}

void to_json(json& j, const HybridContext& ctx) {
  json segs = json::array();
  for (const auto& seg : ctx.segments) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, InstructionBlock>) {
            segs.push_back({{"type", "instructions"}, {"instructions", s.instructions}});
          } else if constexpr (std::is_same_v<T, RawTurn>) {
            json o{{"type", "raw"}, {"turn_index", s.turn_index}, {"user_text", s.user_text}, {"model_text", s.model_text}};
            o["reply_latent"] = s.reply_latent ? json(*s.reply_latent) : json(nullptr);
            segs.push_back(std::move(o));
          } else if constexpr (std::is_same_v<T, LatentTurn>) {
            segs.push_back({{"type", "latent"}, {"turn_index", s.turn_index}, {"user_text", s.user_text}, {"latent", s.latent}});
          } else {
            segs.push_back({{"type", "query"}, {"user_text", s.user_text}});
          }
        },
        seg);
  }
  j = json{{"segments", std::move(segs)}, {"diagnostics", ctx.diagnostics}};
}

HybridContext hybrid_context_from_json(const json& j) {
  HybridContext ctx;
  for (const auto& s : require<json>(j, "segments")) {
    const auto type = require<std::string>(s, "type");
    if (type == "instructions") {
      ctx.segments.emplace_back(InstructionBlock{require<std::vector<std::string>>(s, "instructions")});
    } else if (type == "raw") {
      RawTurn raw{require<std::uint64_t>(s, "turn_index"), require<std::string>(s, "user_text"),
                  require<std::string>(s, "model_text"), std::nullopt};
      if (s.contains("reply_latent") && !s.at("reply_latent").is_null()) {
        raw.reply_latent = nlohmann::adl_serializer<LatentMatrix>::from_json(s.at("reply_latent"));
      }
      ctx.segments.emplace_back(std::move(raw));
    } else if (type == "latent") {
      ctx.segments.emplace_back(LatentTurn{require<std::uint64_t>(s, "turn_index"), require<std::string>(s, "user_text"),
                                           nlohmann::adl_serializer<LatentMatrix>::from_json(require<json>(s, "latent"))});
    } else if (type == "query") {
      ctx.segments.emplace_back(Query{require<std::string>(s, "user_text")});
    } else {
      throw Error(ErrorCode::InvalidInput, "unknown segment type: " + type);
    }
  }
  ctx.diagnostics = require<std::vector<ScoredRecord>>(j, "diagnostics");
  return ctx;
}

}  // namespace rhea

namespace nlohmann {

void adl_serializer<rhea::LatentMatrix>::to_json(json& j, const rhea::LatentMatrix& m) {
  j = json{{"n", m.n()}, {"d", m.d()}, {"data_b64", rhea::latent_to_base64(m)}};
}

rhea::LatentMatrix adl_serializer<rhea::LatentMatrix>::from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("d") || !j.contains("data_b64")) {
    throw rhea::Error(rhea::ErrorCode::InvalidInput, "latent matrix needs n, d and data_b64");
  }
  try {
    return rhea::latent_from_base64(j.at("n").get<std::size_t>(), j.at("d").get<std::size_t>(),
                                    j.at("data_b64").get<std::string>());
  } catch (const json::exception& e) {
    throw rhea::Error(rhea::ErrorCode::InvalidInput, std::string("bad latent matrix: ") + e.what());
  }
}

}  // namespace nlohmann
