#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "rhea/compressor.hpp"
#include "rhea/memory.hpp"

using namespace rhea;

namespace {

const RecognizerVerdict kYes{true, VerdictStage::Rule, std::nullopt};
const RecognizerVerdict kNo{false, VerdictStage::Rule, std::nullopt};

EpisodicMemoryStore session_of(std::size_t turns, std::uint64_t seed) {
  EngineConfig cfg;
  MockCompressor comp(cfg.budget_n, 16, seed);
  EpisodicMemoryStore em;
  for (std::size_t i = 1; i <= turns; ++i) {
    const auto reply = "reply " + std::to_string(i * seed) + " words here";
    em = em_append(em, {i, "user " + std::to_string(i), reply, static_cast<std::int64_t>(i)}, comp.compress(reply),
                   i == 1, cfg);
  }
  return em;
}

}  // namespace

TEST_CASE("im_update") {
  InstructionalMemoryStore empty;
  auto one = im_update(empty, kYes, "Reply in JSON", 1);
  CHECK(one.size() == 1);
  CHECK(one.entries()[0].source_turn == 1);
  CHECK(one.entries()[0].recognized_by == RecognizedBy::Rule);

  auto same = im_update(one, kYes, "reply  in JSON", 2);
  CHECK(same.size() == 1);
  CHECK(same == one);

  auto unchanged = im_update(one, kNo, "What is sports?", 3);
  CHECK(unchanged == one);

  auto classified = im_update(one, {true, VerdictStage::Classifier, "YES"}, "Use metric units", 4);
  REQUIRE(classified.size() == 2);
  CHECK(classified.entries()[1].recognized_by == RecognizedBy::Classifier);
  CHECK(classified.texts() == std::vector<std::string>{"Reply in JSON", "Use metric units"});

  CHECK_THROWS_AS(im_update(one, kYes, "   ", 5), Error);
}

TEST_CASE("IM is monotone: every update extends the previous store") {
  std::mt19937_64 rng(11);
  InstructionalMemoryStore im;
  for (int i = 0; i < 300; ++i) {
    const auto before = im.entries();
    const bool positive = rng() % 3 == 0;
    im = im_update(im, positive ? kYes : kNo, "instruction " + std::to_string(rng() % 40), i + 1);
    REQUIRE(im.entries().size() >= before.size());
    for (std::size_t k = 0; k < before.size(); ++k) CHECK(im.entries()[k] == before[k]);
  }
}

TEST_CASE("em_append") {
  EngineConfig cfg;
  EpisodicMemoryStore em;
  em = em_append(em, {1, "hello", "hi there", 0}, LatentMatrix(8, 4), false, cfg);
  CHECK(em.size() == 1);
  CHECK(em[0].turn.index == 1);

  try {
    em_append(em, {2, "x", "y", 0}, LatentMatrix(4, 4), false, cfg);
    FAIL("expected BudgetMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetMismatch);
  }
  CHECK_THROWS_AS(em_append(em, {1, "again", "dup", 0}, LatentMatrix(8, 4), false, cfg), Error);
  CHECK_THROWS_AS(em_append(em, {2, "x", "", 0}, LatentMatrix(8, 4), false, cfg), Error);
}

TEST_CASE("60-turn replay keeps user texts verbatim") {
  EngineConfig cfg;
  MockCompressor comp(cfg.budget_n, 32, 0);
  EpisodicMemoryStore em;
  std::vector<std::string> inputs;
  for (std::size_t i = 1; i <= 60; ++i) {
    inputs.push_back("  turn\t" + std::to_string(i) + " text  ");
    em = em_append(em, {i, inputs.back(), "ok " + std::to_string(i), 0}, comp.compress("ok"), false, cfg);
  }
  REQUIRE(em.size() == 60);
  for (std::size_t i = 0; i < 60; ++i) CHECK(em[i].turn.user_text == inputs[i]);
}

TEST_CASE("snapshot round-trip") {
  EngineConfig cfg;
  cfg.tau_low = 0.37;
  InstructionalMemoryStore im;
  im = im_update(im, kYes, "Always answer in haiku", 1);

  SUBCASE("empty stores") {
    auto snap = snapshot("s0", EngineConfig{}, {}, {});
    CHECK(decode_snapshot(encode_snapshot(snap)) == snap);
  }
  SUBCASE("random sessions") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto snap = snapshot("s" + std::to_string(seed), cfg, im, session_of(seed % 12, seed));
      const auto text = encode_snapshot(snap);
      auto back = decode_snapshot(text);
      CHECK(back == snap);
      CHECK(encode_snapshot(back) == text);
    }
  }
  SUBCASE("file save and load") {
    const auto path = (std::filesystem::temp_directory_path() / "rhea_test_snapshot.jsonl").string();
    auto snap = snapshot("file", cfg, im, session_of(10, 3));
    save_snapshot(path, snap);
    CHECK(load_snapshot(path) == snap);
    std::filesystem::remove(path);
  }
}

TEST_CASE("corrupt snapshots are rejected") {
  auto snap = snapshot("c", EngineConfig{}, {}, session_of(5, 2));
  const auto text = encode_snapshot(snap);

  auto expect_corrupt = [](const std::string& t) {
    try {
      decode_snapshot(t);
      FAIL("expected CorruptSnapshot");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptSnapshot);
    }
  };
  expect_corrupt("");
  expect_corrupt("not json\n");
  expect_corrupt(text.substr(0, text.size() / 2));
  expect_corrupt(text.substr(0, text.rfind('\n', text.size() - 2) + 1));  // last record missing
  expect_corrupt(R"({"format":"other/1"})" "\n");
  std::string garbled = text;
  garbled[garbled.find("data_b64") + 12] = '!';
  expect_corrupt(garbled);
  try {
    load_snapshot("/nonexistent/dir/rhea.jsonl");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
}
