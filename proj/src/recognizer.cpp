#include "rhea/recognizer.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

namespace rhea {

namespace {

constexpr std::string_view kPromptTemplate =
    "You are a classifier. Determine whether the following user input is a \"global instruction\" in a "
    "multi-turn conversation.A global instruction is a directive that affects all subsequent responses --- "
    "such as their style, format, length, or language.\n"
    "If the input is a global instruction, answer: YES\n"
    "If the input is NOT a global instruction, answer: NO\n"
    "    Examples of instructions:\n"
    "-Input: Explain what is a poem?  Answer: NO\n"
    "-Input: All future answers must be less than 30 words.  Answer: YES\n"
    "-Input: Can you translate this into French?  Answer: NO\n"
    "-Input: Every answer should end with a joke.  Answer: YES\n"
    "-Input: {user_input} Answer: ";

constexpr std::string_view kPlaceholder = "{user_input}";

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_any(std::string_view text, std::initializer_list<std::string_view> needles) {
  for (auto n : needles) {
    if (text.find(n) != std::string_view::npos) return true;
  }
  return false;
}

bool contains_word(std::string_view text, std::string_view word) {
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string_view::npos) {
    const bool left = pos == 0 || !is_word_char(text[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right = end >= text.size() || !is_word_char(text[end]);
    if (left && right) return true;
    pos = end;
  }
  return false;
}

}  // namespace

std::string_view to_string(VerdictStage stage) { return stage == VerdictStage::Rule ? "rule" : "classifier"; }

const std::vector<RulePattern>& default_rules() {
  static const std::vector<RulePattern> rules = [] {
    std::vector<RulePattern> r;
    for (std::string_view p : {"all future", "from now on", "every answer", "every response", "always respond",
                               "always reply", "in all subsequent", "must end with", "must start with",
                               "all responses must", "all replies"}) {
      r.push_back({std::string(p), "keyword: " + std::string(p)});
    }
    return r;
  }();
  return rules;
}

std::vector<RulePattern> load_rules(std::istream& in) {
  std::vector<RulePattern> rules;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    std::string description;
    if (hash != std::string::npos) {
      description = normalize_instruction(line.substr(hash + 1));
      line.resize(hash);
    }
    auto pattern = to_lower(normalize_instruction(line));
    if (pattern.empty() || pattern == "^") continue;
    if (description.empty()) description = pattern;
    rules.push_back({std::move(pattern), std::move(description)});
  }
  return rules;
}

std::vector<RulePattern> load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open rule file: " + path);
  auto rules = load_rules(in);
  if (rules.empty()) throw Error(ErrorCode::InvalidInput, "rule file has no patterns: " + path);
  return rules;
}

bool rule_filter(std::string_view user_text, const std::vector<RulePattern>& rules) {
  const auto text = to_lower(normalize_instruction(user_text));
  for (const auto& rule : rules) {
    if (rule.pattern.empty()) continue;
    if (rule.pattern.front() == '^') {
      if (std::string_view(text).starts_with(std::string_view(rule.pattern).substr(1))) return true;
    } else if (text.find(rule.pattern) != std::string::npos) {
      return true;
    }
  }
  return false;
}

std::string classifier_prompt(std::string_view user_text) {
  std::string prompt(kPromptTemplate);
  prompt.replace(prompt.find(kPlaceholder), kPlaceholder.size(), user_text);
  return prompt;
}

std::optional<bool> parse_classifier_output(std::string_view output) {
  const auto lower = to_lower(output);
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && !is_word_char(lower[i])) ++i;
    std::size_t start = i;
    while (i < lower.size() && is_word_char(lower[i])) ++i;
    const std::string_view word(lower.data() + start, i - start);
    if (word == "yes") return true;
    if (word == "no") return false;
  }
  return std::nullopt;
}

RecognizerVerdict classify(std::string_view user_text, ClassifierBackend& backend) {
  auto output = backend.complete(classifier_prompt(user_text));
  const bool verdict = parse_classifier_output(output).value_or(true);
  return {verdict, VerdictStage::Classifier, std::move(output)};
}

RecognizerVerdict recognize(std::string_view user_text, const EngineConfig& cfg, const RecognizerSetup& setup) {
  if (rule_filter(user_text, setup.rules)) return {true, VerdictStage::Rule, std::nullopt};
  switch (cfg.recognizer_mode) {
    case RecognizerMode::RulesOnly:
      return {false, VerdictStage::Rule, std::nullopt};
    case RecognizerMode::Hybrid:
      if (setup.classifier == nullptr) throw Error(ErrorCode::InvalidInput, "hybrid recognizer needs a classifier");
      return classify(user_text, *setup.classifier);
    case RecognizerMode::Oracle: {
      if (setup.oracle == nullptr) throw Error(ErrorCode::InvalidInput, "oracle recognizer needs a label table");
      const bool label = setup.oracle->contains(user_text);
      return {label, VerdictStage::Classifier, std::string(label ? "oracle:YES" : "oracle:NO")};
    }
  }
  return {false, VerdictStage::Rule, std::nullopt};
}

RecognizerMetrics evaluate_recognizer(const std::vector<LabeledText>& dataset, const EngineConfig& cfg,
                                      const RecognizerSetup& setup) {
  std::size_t pos = 0;
  for (const auto& item : dataset) pos += item.label ? 1 : 0;
  if (pos == 0 || pos == dataset.size()) {
    throw Error(ErrorCode::EmptyDataset, "dataset needs at least one positive and one negative sample");
  }
  RecognizerMetrics m;
  for (const auto& item : dataset) {
    const bool predicted = recognize(item.text, cfg, setup).is_global_instruction;
    if (predicted && item.label) ++m.tp;
    else if (predicted) ++m.fp;
    else if (item.label) ++m.fn;
    else ++m.tn;
  }
  const auto total = static_cast<double>(dataset.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  m.precision = (m.tp + m.fp) == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

std::vector<LabeledText> build_validation_set(std::uint64_t seed) {
  static constexpr std::array kLeads = {
      "In all future answers, ", "From now on, ", "Going forward, ", "For the rest of our chat, ", "Please always ",
      "Until I say otherwise, ", "In all subsequent replies, ", "For every answer you give, ", "Whenever you reply, ",
      "Each time you answer, "};
  static constexpr std::array kConstraints = {
      "keep it under 50 words.", "use a formal tone.", "reply in Spanish.", "format the output as JSON.",
      "end with a question.", "start with the word 'Indeed'.", "avoid using commas.", "write in lowercase letters.",
      "include a short summary at the end.", "use bullet points."};
  static constexpr std::array kTopics = {
      "photosynthesis", "the French revolution", "black holes", "machine learning", "jazz music",
      "the stock market", "climate change", "ancient Rome", "quantum computing", "the human immune system",
      "volcanoes", "renewable energy", "the Olympic games", "coffee brewing", "chess openings"};
  static constexpr std::array kQueries = {
      "What is {}?", "What are your thoughts on {}?", "Explain {} to a child.", "Can you summarize {}?",
      "How does {} work?", "Why is {} important?", "Give me three facts about {}.",
      "What will happen to {} from now on?", "Write a short poem about {}.", "Compare {} with something familiar."};

  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::vector<LabeledText> out;
  out.reserve(200);
  for (int i = 0; i < 100; ++i) {
    std::string lead = kLeads[pick(kLeads.size())];
    std::string constraint = kConstraints[pick(kConstraints.size())];
    out.push_back({lead + constraint, true});
  }
  for (int i = 0; i < 100; ++i) {
    std::string q = kQueries[pick(kQueries.size())];
    q.replace(q.find("{}"), 2, kTopics[pick(kTopics.size())]);
    out.push_back({std::move(q), false});
  }
  return out;
}

std::string ScriptedClassifier::complete(const std::string& prompt) {
  ++calls_;
  last_prompt_ = prompt;
  if (down_) throw Error(ErrorCode::BackendUnavailable, "scripted classifier is down");
  if (outputs_.empty()) return "";
  const auto& out = outputs_[std::min(next_, outputs_.size() - 1)];
  ++next_;
  return out;
}

bool KeywordClassifier::judge(std::string_view user_text) {
  const auto text = to_lower(normalize_instruction(user_text));
  const bool persistent =
      contains_any(text, {"going forward", "from here on", "henceforth", "for the rest", "from now", "until i say",
                          "in all ", "future", "subsequent", "each of your", "all of your", "whenever you"}) ||
      contains_word(text, "always") || contains_word(text, "every");
  if (!persistent) return false;
  for (std::string_view w : {"reply", "replies", "answer", "answers", "response", "responses", "respond", "write",
                             "format", "language", "tone", "words", "start", "begin", "end", "message", "output"}) {
    if (contains_word(text, w)) return true;
  }
  return false;
}

std::string KeywordClassifier::complete(const std::string& prompt) {
  // The user input sits between the last "-Input: " and the trailing " Answer: ".
  const auto start = prompt.rfind("-Input: ");
  const auto end = prompt.rfind(" Answer:");
  std::string_view input;
  if (start != std::string::npos && end != std::string::npos && end >= start + 8) {
    input = std::string_view(prompt).substr(start + 8, end - start - 8);
  }
  return judge(input) ? "YES" : "NO";
}

std::string first_choice_text(const json& response) {
  try {
    const auto& choice = response.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("malformed chat completion: ") + e.what());
  }
}

HttpClassifier::HttpClassifier(std::string url, std::string model, std::string api_key, RetryPolicy policy)
    : endpoint_(parse_endpoint(url, "/v1/chat/completions")),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      policy_(policy) {}

std::string HttpClassifier::complete(const std::string& prompt) {
  json body{{"model", model_},
            {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", 0}};
  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  return first_choice_text(post_json(endpoint_, body, policy_, headers));
}

}  // namespace rhea
