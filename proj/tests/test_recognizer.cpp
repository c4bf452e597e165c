#include <doctest.h>

#include <httplib.h>

#include <sstream>
#include <thread>

#include "rhea/recognizer.hpp"

using namespace rhea;

namespace {

EngineConfig mode(RecognizerMode m) {
  EngineConfig cfg;
  cfg.recognizer_mode = m;
  return cfg;
}

}  // namespace

TEST_CASE("rule filter") {
  const auto& rules = default_rules();
  CHECK(rule_filter("all future answers must be less than 30 words", rules));
  CHECK_FALSE(rule_filter("Explain what is a poem?", rules));
  CHECK(rule_filter("ALL FUTURE RESPONSES MUST rhyme", rules));
  CHECK(rule_filter("From   now\ton, reply tersely", rules));
  CHECK_FALSE(rule_filter("", rules));
}

TEST_CASE("rules load from a file with comments and anchors") {
  std::istringstream in("# leading comment\nalways use\n^please  # anchored\n\n");
  auto rules = load_rules(in);
  REQUIRE(rules.size() == 2);
  CHECK(rule_filter("You should ALWAYS USE metric units", rules));
  CHECK(rule_filter("Please be brief", rules));
  CHECK_FALSE(rule_filter("Be brief please", rules));
}

TEST_CASE("classifier prompt is the fixed few-shot template") {
  const auto p = classifier_prompt("Respond in Spanish from now on");
  CHECK(p.find("You are a classifier.") == 0);
  CHECK(p.find("multi-turn conversation.A global instruction is a directive") != std::string::npos);
  CHECK(p.find("\n    Examples of instructions:\n") != std::string::npos);
  CHECK(p.find("-Input: Explain what is a poem?  Answer: NO\n") != std::string::npos);
  CHECK(p.find("-Input: All future answers must be less than 30 words.  Answer: YES\n") != std::string::npos);
  CHECK(p.find("-Input: Can you translate this into French?  Answer: NO\n") != std::string::npos);
  CHECK(p.find("-Input: Every answer should end with a joke.  Answer: YES\n") != std::string::npos);
  CHECK(p.size() >= 8);
  CHECK(p.substr(p.size() - std::string("-Input: Respond in Spanish from now on Answer: ").size()) ==
        "-Input: Respond in Spanish from now on Answer: ");
  CHECK(p.find("{user_input}") == std::string::npos);
}

TEST_CASE("classifier output parsing") {
  CHECK(parse_classifier_output("YES") == true);
  CHECK(parse_classifier_output(" no.") == false);
  CHECK(parse_classifier_output("Answer: Yes, it is") == true);
  CHECK(parse_classifier_output("nothing here") == std::nullopt);
  CHECK(parse_classifier_output("Maybe?") == std::nullopt);
  CHECK(parse_classifier_output("") == std::nullopt);
}

TEST_CASE("classify with scripted backends") {
  ScriptedClassifier yes({"YES"});
  CHECK(classify("Every answer should end with a joke.", yes).is_global_instruction);
  ScriptedClassifier no({"NO"});
  CHECK_FALSE(classify("Can you translate this into French?", no).is_global_instruction);
  ScriptedClassifier maybe({"Maybe?"});
  auto v = classify("Hmm", maybe);
  CHECK(v.is_global_instruction);
  CHECK(v.stage == VerdictStage::Classifier);
  CHECK(v.raw_classifier_output == std::optional<std::string>("Maybe?"));
  CHECK(maybe.last_prompt() == classifier_prompt("Hmm"));
}

TEST_CASE("keyword classifier on the few-shot examples") {
  KeywordClassifier k;
  CHECK(classify("Explain what is a poem?", k).is_global_instruction == false);
  CHECK(classify("All future answers must be less than 30 words.", k).is_global_instruction == true);
  CHECK(classify("Can you translate this into French?", k).is_global_instruction == false);
  CHECK(classify("Every answer should end with a joke.", k).is_global_instruction == true);
  CHECK(KeywordClassifier::judge("Going forward, begin each answer with 'Zed'."));
  CHECK_FALSE(KeywordClassifier::judge("What is the weather like?"));
}

TEST_CASE("recognize stages") {
  RecognizerSetup setup;
  ScriptedClassifier yes({"YES"});
  setup.classifier = &yes;

  auto v = recognize("All future answers must be less than 30 words.", mode(RecognizerMode::Hybrid), setup);
  CHECK(v.is_global_instruction);
  CHECK(v.stage == VerdictStage::Rule);
  CHECK(yes.calls() == 0);

  v = recognize("What is 2+2?", mode(RecognizerMode::RulesOnly), setup);
  CHECK_FALSE(v.is_global_instruction);
  CHECK(v.stage == VerdictStage::Rule);

  v = recognize("Respond in Spanish please", mode(RecognizerMode::Hybrid), setup);
  CHECK(v.is_global_instruction);
  CHECK(v.stage == VerdictStage::Classifier);
  CHECK(yes.calls() == 1);

  RecognizerSetup none;
  CHECK_THROWS_AS(recognize("anything", mode(RecognizerMode::Hybrid), none), Error);

  ScriptedClassifier down({"YES"});
  down.set_unavailable(true);
  setup.classifier = &down;
  try {
    recognize("Respond in Spanish please", mode(RecognizerMode::Hybrid), setup);
    FAIL("expected BackendUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
}

TEST_CASE("oracle mode reads labels") {
  OracleLabels labels;
  labels.add("Use British spelling throughout.");
  RecognizerSetup setup;
  setup.rules.clear();
  setup.oracle = &labels;
  CHECK(recognize("use  british spelling throughout.", mode(RecognizerMode::Oracle), setup).is_global_instruction);
  CHECK_FALSE(recognize("All future answers must rhyme", mode(RecognizerMode::Oracle), setup).is_global_instruction);
}

TEST_CASE("evaluate_recognizer metrics") {
  std::vector<LabeledText> data = {{"All future answers must be short.", true},
                                   {"From now on reply in French.", true},
                                   {"What is a poem?", false},
                                   {"How tall is Everest?", false}};
  RecognizerSetup setup;
  auto m = evaluate_recognizer(data, mode(RecognizerMode::RulesOnly), setup);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);

  ScriptedClassifier always({"YES"});
  setup.rules.clear();
  setup.classifier = &always;
  m = evaluate_recognizer(data, mode(RecognizerMode::Hybrid), setup);
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == 1.0);

  CHECK_THROWS_AS(evaluate_recognizer({{"x", true}}, mode(RecognizerMode::RulesOnly), setup), Error);
  CHECK_THROWS_AS(evaluate_recognizer({}, mode(RecognizerMode::RulesOnly), setup), Error);
}

TEST_CASE("validation set is balanced and deterministic") {
  auto a = build_validation_set(7);
  auto b = build_validation_set(7);
  REQUIRE(a.size() == b.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].text == b[i].text);
    pos += a[i].label;
  }
  CHECK(pos * 2 == a.size());

  KeywordClassifier k;
  RecognizerSetup setup;
  setup.classifier = &k;
  const auto rules = evaluate_recognizer(a, mode(RecognizerMode::RulesOnly), setup);
  const auto hybrid = evaluate_recognizer(a, mode(RecognizerMode::Hybrid), setup);
  CHECK(hybrid.recall >= rules.recall);
  CHECK(hybrid.accuracy > 0.5);
}

TEST_CASE("HTTP classifier speaks chat completions") {
  httplib::Server server;
  json seen;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"YES"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpClassifier c("http://127.0.0.1:" + std::to_string(port), "tiny");
  CHECK(classify("Respond in Spanish from now on", c).is_global_instruction);
  CHECK(seen["model"] == "tiny");
  CHECK(seen["temperature"] == 0);
  CHECK(seen["messages"][0]["content"] == classifier_prompt("Respond in Spanish from now on"));

  server.stop();
  t.join();
}

TEST_CASE("first_choice_text") {
  CHECK(first_choice_text(json::parse(R"({"choices":[{"text":"NO"}]})")) == "NO");
  CHECK_THROWS_AS(first_choice_text(json::parse(R"({"choices":[]})")), Error);
}
