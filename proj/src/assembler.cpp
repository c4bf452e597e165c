#include "rhea/assembler.hpp"

#include <algorithm>
#include <sstream>

namespace rhea {

HybridContext assemble(const InstructionalMemoryStore& im, const std::vector<ScoredRecord>& scored,
                       const EpisodicMemoryStore& em, std::string_view query_text, const EngineConfig& /*cfg*/) {
  HybridContext ctx;
  ctx.segments.emplace_back(InstructionBlock{im.texts()});
  std::size_t prev = 0;
  bool first = true;
  for (const auto& s : scored) {
    if (s.record_index >= em.size()) throw Error(ErrorCode::InvalidInput, "scored record index out of range");
    if (!first && s.record_index <= prev) throw Error(ErrorCode::InvalidInput, "scored records are not chronological");
    first = false;
    prev = s.record_index;
    const auto& rec = em[s.record_index];
    switch (s.tier) {
      case Tier::HighResolution:
        ctx.segments.emplace_back(RawTurn{rec.turn.index, rec.turn.user_text, rec.turn.model_text, rec.reply_latent});
        break;
      case Tier::LowResolution:
        if (rec.reply_latent) {
          ctx.segments.emplace_back(LatentTurn{rec.turn.index, rec.turn.user_text, *rec.reply_latent});
        }
        break;
      case Tier::Forget:
        break;
    }
  }
  ctx.segments.emplace_back(Query{std::string(query_text)});
  ctx.diagnostics = scored;
  return ctx;
}

std::size_t context_cost(const HybridContext& ctx, const EngineConfig& cfg) {
  std::size_t cost = 0;
  for (const auto& seg : ctx.segments) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, InstructionBlock>) {
            for (const auto& text : s.instructions) cost += token_count(text);
          } else if constexpr (std::is_same_v<T, RawTurn>) {
            cost += token_count(s.user_text) + token_count(s.model_text);
          } else if constexpr (std::is_same_v<T, LatentTurn>) {
            cost += token_count(s.user_text) + cfg.budget_n;
          } else {
            cost += token_count(s.user_text);
          }
        },
        seg);
  }
  return cost;
}

HybridContext enforce_budget(HybridContext ctx, const EngineConfig& cfg) {
  std::size_t fixed = 0;
  for (const auto& seg : ctx.segments) {
    if (const auto* ib = std::get_if<InstructionBlock>(&seg)) {
      for (const auto& text : ib->instructions) fixed += token_count(text);
    } else if (const auto* q = std::get_if<Query>(&seg)) {
      fixed += token_count(q->user_text);
    }
  }
  if (fixed > cfg.context_token_budget) {
    throw Error(ErrorCode::BudgetTooSmall, "instructions and query need " + std::to_string(fixed) +
                                               " tokens, budget is " + std::to_string(cfg.context_token_budget));
  }
  auto& segs = ctx.segments;
  while (context_cost(ctx, cfg) > cfg.context_token_budget) {
    auto raw = std::find_if(segs.begin(), segs.end(), [](const Segment& s) { return std::holds_alternative<RawTurn>(s); });
    if (raw != segs.end()) {
      auto& turn = std::get<RawTurn>(*raw);
      if (turn.reply_latent) {
        *raw = LatentTurn{turn.turn_index, std::move(turn.user_text), std::move(*turn.reply_latent)};
      } else {
        segs.erase(raw);
      }
      continue;
    }
    auto latent =
        std::find_if(segs.begin(), segs.end(), [](const Segment& s) { return std::holds_alternative<LatentTurn>(s); });
    if (latent == segs.end()) break;  // unreachable: fixed part fits
    segs.erase(latent);
  }
  return ctx;
}

std::string latent_marker(std::uint64_t turn_index, std::string_view user_text) {
  const auto tokens = whitespace_tokens(user_text);
  std::string head;
  for (std::size_t i = 0; i < std::min(tokens.size(), kMarkerTokens); ++i) {
    if (!head.empty()) head.push_back(' ');
    head.append(tokens[i]);
  }
  return "[compressed memory of turn " + std::to_string(turn_index) + ": " + head + " ...]";
}

BackendPayload render(const HybridContext& ctx, RenderMode mode) {
  BackendPayload p;
  for (const auto& seg : ctx.segments) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, InstructionBlock>) {
            if (s.instructions.empty()) return;
            std::string block(kInstructionHeader);
            for (const auto& text : s.instructions) block += "\n" + text;
            p.system = std::move(block);
          } else if constexpr (std::is_same_v<T, RawTurn>) {
            p.messages.push_back({"user", s.user_text, s.turn_index});
            if (!s.model_text.empty()) p.messages.push_back({"assistant", s.model_text, s.turn_index});
          } else if constexpr (std::is_same_v<T, LatentTurn>) {
            if (mode == RenderMode::Hybrid) {
              p.messages.push_back({"user", s.user_text, s.turn_index});
              p.latents.push_back({s.turn_index, s.latent});
            } else {
              p.messages.push_back({"user", latent_marker(s.turn_index, s.user_text), s.turn_index});
            }
          } else {
            p.messages.push_back({"user", s.user_text, std::nullopt});
          }
        },
        seg);
  }
  return p;
}

std::vector<std::string> instruction_lines(const BackendPayload& payload) {
  std::vector<std::string> lines;
  std::istringstream in(payload.system);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      if (line == kInstructionHeader) continue;
    }
    lines.push_back(line);
  }
  return lines;
}

void to_json(json& j, const BackendPayload& p) {
  json messages = json::array();
  for (const auto& m : p.messages) {
    json o{{"role", m.role}, {"content", m.content}};
    if (m.turn_index) o["turn_index"] = *m.turn_index;
    messages.push_back(std::move(o));
  }
  json latents = json::array();
  for (const auto& l : p.latents) {
    latents.push_back({{"turn_index", l.turn_index},
                       {"n", l.latent.n()},
                       {"d", l.latent.d()},
                       {"data_b64", latent_to_base64(l.latent)}});
  }
  j = json{{"system", p.system}, {"messages", std::move(messages)}, {"latents", std::move(latents)}};
}

BackendPayload payload_from_json(const json& j) {
  BackendPayload p;
  try {
    p.system = j.at("system").get<std::string>();
    for (const auto& m : j.at("messages")) {
      PayloadMessage msg{m.at("role").get<std::string>(), m.at("content").get<std::string>(), std::nullopt};
      if (m.contains("turn_index")) msg.turn_index = m.at("turn_index").get<std::uint64_t>();
      p.messages.push_back(std::move(msg));
    }
    for (const auto& l : j.at("latents")) {
      p.latents.push_back({l.at("turn_index").get<std::uint64_t>(),
                           latent_from_base64(l.at("n").get<std::size_t>(), l.at("d").get<std::size_t>(),
                                              l.at("data_b64").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad backend payload: ") + e.what());
  }
  return p;
}

}  // namespace rhea
