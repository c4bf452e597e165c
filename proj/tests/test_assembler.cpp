#include <doctest.h>

#include <random>
#include <set>

#include "rhea/assembler.hpp"
#include "rhea/compressor.hpp"
#include "rhea/llm.hpp"

using namespace rhea;

namespace {

const RecognizerVerdict kYes{true, VerdictStage::Rule, std::nullopt};

EpisodicMemoryStore em_of(std::size_t turns, const EngineConfig& cfg, std::size_t d = 8) {
  MockCompressor comp(cfg.budget_n, d, 1);
  EpisodicMemoryStore em;
  for (std::size_t i = 1; i <= turns; ++i) {
    const auto reply = "reply" + std::to_string(i) + " body";
    em = em_append(em, {i, "user" + std::to_string(i) + " asks", reply, 0}, comp.compress(reply), false, cfg);
  }
  return em;
}

std::vector<ScoredRecord> scored_as(std::size_t turns, const std::vector<Tier>& tiers) {
  std::vector<ScoredRecord> out;
  for (std::size_t i = 0; i < turns; ++i) out.push_back({i, 0.0, tiers[i % tiers.size()]});
  return out;
}

std::vector<std::uint64_t> indices(const HybridContext& ctx) {
  std::vector<std::uint64_t> out;
  for (const auto& seg : ctx.segments) {
    if (const auto* r = std::get_if<RawTurn>(&seg)) out.push_back(r->turn_index);
    if (const auto* l = std::get_if<LatentTurn>(&seg)) out.push_back(l->turn_index);
  }
  return out;
}

}  // namespace

TEST_CASE("assemble") {
  EngineConfig cfg;
  SUBCASE("empty stores") {
    auto ctx = assemble({}, {}, {}, "q", cfg);
    REQUIRE(ctx.segments.size() == 2);
    CHECK(std::get<InstructionBlock>(ctx.segments[0]).instructions.empty());
    CHECK(std::get<Query>(ctx.segments[1]).user_text == "q");
  }
  SUBCASE("one high record") {
    auto em = em_of(1, cfg);
    auto ctx = assemble({}, {{0, 0.9, Tier::HighResolution}}, em, "q", cfg);
    REQUIRE(ctx.segments.size() == 3);
    CHECK(std::holds_alternative<InstructionBlock>(ctx.segments[0]));
    CHECK(std::get<RawTurn>(ctx.segments[1]).model_text == "reply1 body");
    CHECK(std::holds_alternative<Query>(ctx.segments[2]));
  }
  SUBCASE("mixed tiers") {
    auto em = em_of(7, cfg);
    std::vector<ScoredRecord> scored = {{1, 0.9, Tier::HighResolution},
                                        {4, 0.6, Tier::LowResolution},
                                        {6, 0.1, Tier::Forget}};
    auto ctx = assemble({}, scored, em, "q", cfg);
    REQUIRE(ctx.segments.size() == 4);
    CHECK(std::get<RawTurn>(ctx.segments[1]).turn_index == 2);
    CHECK(std::get<LatentTurn>(ctx.segments[2]).turn_index == 5);
    CHECK(std::get<LatentTurn>(ctx.segments[2]).latent == *em[4].reply_latent);
    CHECK(indices(ctx) == std::vector<std::uint64_t>{2, 5});
    CHECK(ctx.diagnostics == scored);
    CHECK_FALSE(check_structure(ctx).has_value());
  }
  SUBCASE("bad scored input") {
    auto em = em_of(3, cfg);
    CHECK_THROWS_AS(assemble({}, {{5, 0.9, Tier::HighResolution}}, em, "q", cfg), Error);
    CHECK_THROWS_AS(assemble({}, {{1, 0.9, Tier::HighResolution}, {0, 0.9, Tier::HighResolution}}, em, "q", cfg),
                    Error);
  }
}

TEST_CASE("enforce_budget") {
  EngineConfig cfg;
  auto em = em_of(3, cfg);
  auto ctx = assemble({}, scored_as(3, {Tier::HighResolution}), em, "final question", cfg);
  // 3 raw turns of 2+2 tokens, plus a 2-token query.
  REQUIRE(context_cost(ctx, cfg) == 14);

  SUBCASE("under budget is unchanged") {
    cfg.context_token_budget = 14;
    CHECK(enforce_budget(ctx, cfg) == ctx);
  }
  SUBCASE("one demotion") {
    // Demoting turn 1 costs 2 + budget_n = 10 instead of 4.
    cfg.budget_n = 1;
    ctx = assemble({}, scored_as(3, {Tier::HighResolution}), em_of(3, cfg), "final question", cfg);
    cfg.context_token_budget = 13;
    auto out = enforce_budget(ctx, cfg);
    REQUIRE(out.segments.size() == 5);
    CHECK(std::get<LatentTurn>(out.segments[1]).turn_index == 1);
    CHECK(std::get<RawTurn>(out.segments[2]).turn_index == 2);
    CHECK(std::get<RawTurn>(out.segments[3]).turn_index == 3);
    CHECK(context_cost(out, cfg) == 13);
  }
  SUBCASE("demote everything then drop oldest") {
    cfg.context_token_budget = 12;
    auto out = enforce_budget(ctx, cfg);
    CHECK(indices(out) == std::vector<std::uint64_t>{3});
    CHECK(std::holds_alternative<LatentTurn>(out.segments[1]));
    CHECK(context_cost(out, cfg) <= 12);
  }
  SUBCASE("too small") {
    InstructionalMemoryStore im;
    for (int i = 0; i < 5; ++i) im = im_update(im, kYes, "a very long instruction number " + std::to_string(i), i + 1);
    cfg.context_token_budget = 10;
    try {
      enforce_budget(assemble(im, {}, {}, "q", cfg), cfg);
      FAIL("expected BudgetTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BudgetTooSmall);
    }
  }
}

TEST_CASE("enforce_budget on random contexts is safe and idempotent") {
  std::mt19937_64 rng(17);
  const std::vector<Tier> all = {Tier::HighResolution, Tier::LowResolution, Tier::Forget};
  for (int iter = 0; iter < 200; ++iter) {
    EngineConfig cfg;
    cfg.budget_n = 1 + rng() % 8;
    const std::size_t turns = rng() % 12;
    auto em = em_of(turns, cfg);
    std::vector<ScoredRecord> scored;
    for (std::size_t i = 0; i < turns; ++i) scored.push_back({i, 0.0, all[rng() % 3]});
    auto ctx = assemble({}, scored, em, "the query", cfg);
    cfg.context_token_budget = 2 + rng() % 40;
    auto once = enforce_budget(ctx, cfg);
    CHECK(context_cost(once, cfg) <= cfg.context_token_budget);
    CHECK(enforce_budget(once, cfg) == once);
    CHECK_FALSE(check_structure(once).has_value());
    const auto before = indices(ctx);
    const std::set<std::uint64_t> in(before.begin(), before.end());
    for (auto i : indices(once)) CHECK(in.count(i) == 1);
  }
}

TEST_CASE("render") {
  EngineConfig cfg;
  InstructionalMemoryStore im = im_update({}, kYes, "Start every reply with 'O'", 1);
  auto em = em_of(3, cfg);
  auto ctx = assemble(im, scored_as(3, {Tier::HighResolution, Tier::LowResolution, Tier::Forget}), em, "now what", cfg);

  SUBCASE("hybrid") {
    auto p = render(ctx, RenderMode::Hybrid);
    CHECK(p.system == "Global instructions (apply to every reply):\nStart every reply with 'O'");
    CHECK(instruction_lines(p) == im.texts());
    REQUIRE(p.messages.size() == 4);
    CHECK(p.messages[0] == PayloadMessage{"user", "user1 asks", 1});
    CHECK(p.messages[1] == PayloadMessage{"assistant", "reply1 body", 1});
    CHECK(p.messages[2] == PayloadMessage{"user", "user2 asks", 2});
    CHECK(p.messages[3] == PayloadMessage{"user", "now what", std::nullopt});
    REQUIRE(p.latents.size() == 1);
    CHECK(p.latents[0].turn_index == 2);
    CHECK(p.latents[0].latent == *em[1].reply_latent);
  }
  SUBCASE("text only") {
    auto p = render(ctx, RenderMode::TextOnly);
    CHECK(p.latents.empty());
    CHECK(p.messages[2].content == "[compressed memory of turn 2: user2 asks ...]");
    for (const auto& m : p.messages) CHECK(m.content.find("reply2") == std::string::npos);
  }
  SUBCASE("forgotten turns leave no trace") {
    for (auto mode : {RenderMode::Hybrid, RenderMode::TextOnly}) {
      const auto text = json(render(ctx, mode)).dump();
      CHECK(text.find("user3") == std::string::npos);
      CHECK(text.find("reply3") == std::string::npos);
    }
  }
  SUBCASE("no instructions means an empty system block") {
    auto p = render(assemble({}, {}, {}, "q", cfg), RenderMode::Hybrid);
    CHECK(p.system.empty());
    CHECK(instruction_lines(p).empty());
  }
}

TEST_CASE("latent_marker keeps the first 12 tokens") {
  CHECK(latent_marker(4, "a b c d e f g h i j k l m n") == "[compressed memory of turn 4: a b c d e f g h i j k l ...]");
  CHECK(latent_marker(1, "") == "[compressed memory of turn 1:  ...]");
}

TEST_CASE("payload JSON round-trip") {
  EngineConfig cfg;
  InstructionalMemoryStore im = im_update({}, kYes, "Reply in JSON", 1);
  auto em = em_of(4, cfg, 5);
  auto p = render(assemble(im, scored_as(4, {Tier::LowResolution, Tier::HighResolution}), em, "q", cfg),
                  RenderMode::Hybrid);
  const json j = p;
  CHECK(j["latents"][0]["n"] == 8);
  CHECK(j["latents"][0]["d"] == 5);
  CHECK(j["messages"].back().contains("turn_index") == false);
  CHECK(payload_from_json(j) == p);
  CHECK(payload_from_json(json::parse(j.dump())) == p);
  CHECK_THROWS_AS(payload_from_json(json{{"system", ""}}), Error);
}

TEST_CASE("echo backend returns the instruction block") {
  EngineConfig cfg;
  InstructionalMemoryStore im;
  im = im_update(im, kYes, "Start every reply with 'O'", 1);
  im = im_update(im, kYes, "Never use emoji", 4);
  auto p = render(assemble(im, scored_as(2, {Tier::HighResolution}), em_of(2, cfg), "q", cfg), RenderMode::Hybrid);
  EchoInstructionsLlm echo;
  CHECK(echo.reply(p) == "Start every reply with 'O'\nNever use emoji");
}

TEST_CASE("instruction block comes first in every rendering") {
  std::mt19937_64 rng(8);
  const std::vector<Tier> all = {Tier::HighResolution, Tier::LowResolution, Tier::Forget};
  for (int iter = 0; iter < 100; ++iter) {
    EngineConfig cfg;
    InstructionalMemoryStore im;
    const auto k = rng() % 4;
    for (std::size_t i = 0; i < k; ++i) im = im_update(im, kYes, "rule " + std::to_string(i), i + 1);
    const std::size_t turns = rng() % 10;
    std::vector<ScoredRecord> scored;
    for (std::size_t i = 0; i < turns; ++i) scored.push_back({i, 0.0, all[rng() % 3]});
    auto ctx = assemble(im, scored, em_of(turns, cfg), "query", cfg);
    REQUIRE(std::holds_alternative<InstructionBlock>(ctx.segments.front()));
    REQUIRE(std::holds_alternative<Query>(ctx.segments.back()));
    auto p = render(ctx, rng() % 2 ? RenderMode::Hybrid : RenderMode::TextOnly);
    CHECK(instruction_lines(p) == im.texts());
    CHECK(p.messages.back().content == "query");
  }
}
