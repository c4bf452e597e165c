#pragma once

// Two-stage instruction recognizer: a keyword fast filter, then a small LLM
// classifier for turns the rules do not catch.

#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rhea/core.hpp"
#include "rhea/http_json.hpp"

namespace rhea {

struct RulePattern {
  std::string pattern;  // lowercase; a leading '^' anchors at the start
  std::string description;
};

enum class VerdictStage { Rule, Classifier };

struct RecognizerVerdict {
  bool is_global_instruction = false;
  VerdictStage stage = VerdictStage::Rule;
  std::optional<std::string> raw_classifier_output;

  bool operator==(const RecognizerVerdict&) const = default;
};

std::string_view to_string(VerdictStage stage);

const std::vector<RulePattern>& default_rules();

/// One pattern per line; blank lines and '#' comments are skipped.
std::vector<RulePattern> load_rules(std::istream& in);
std::vector<RulePattern> load_rules_file(const std::string& path);

bool rule_filter(std::string_view user_text, const std::vector<RulePattern>& rules);

/// Anything that can answer the filled classifier prompt.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  /// Throws Error(BackendUnavailable) when the backend cannot be reached.
  virtual std::string complete(const std::string& prompt) = 0;
};

std::string classifier_prompt(std::string_view user_text);

/// First standalone case-insensitive YES/NO token; nullopt when neither occurs.
std::optional<bool> parse_classifier_output(std::string_view output);

/// Unparseable output counts as an instruction (recall first).
RecognizerVerdict classify(std::string_view user_text, ClassifierBackend& backend);

/// Label table consulted in Oracle mode, keyed by normalized text.
class OracleLabels {
 public:
  void add(std::string_view text) { positives_.insert(dedup_key(text)); }
  bool contains(std::string_view text) const { return positives_.count(dedup_key(text)) > 0; }

 private:
  std::unordered_set<std::string> positives_;
};

struct RecognizerSetup {
  std::vector<RulePattern> rules = default_rules();
  ClassifierBackend* classifier = nullptr;  // required in Hybrid mode
  const OracleLabels* oracle = nullptr;     // required in Oracle mode
};

RecognizerVerdict recognize(std::string_view user_text, const EngineConfig& cfg, const RecognizerSetup& setup);

struct RecognizerMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct LabeledText {
  std::string text;
  bool label = false;
};

RecognizerMetrics evaluate_recognizer(const std::vector<LabeledText>& dataset, const EngineConfig& cfg,
                                      const RecognizerSetup& setup);

/// Balanced 100 + 100 validation set: persistent directives in the style of
/// instruction-following benchmarks versus ordinary conversational queries.
std::vector<LabeledText> build_validation_set(std::uint64_t seed);

// Backends.

/// Returns scripted outputs in order, repeating the last one; can be told to fail.
class ScriptedClassifier : public ClassifierBackend {
 public:
  explicit ScriptedClassifier(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}
  std::string complete(const std::string& prompt) override;
  void set_unavailable(bool down) { down_ = down; }
  std::size_t calls() const { return calls_; }
  const std::string& last_prompt() const { return last_prompt_; }

 private:
  std::vector<std::string> outputs_;
  std::size_t next_ = 0;
  std::size_t calls_ = 0;
  bool down_ = false;
  std::string last_prompt_;
};

/// Deterministic offline stand-in for the lightweight classifier: answers YES
/// when the input pairs a persistence cue ("always", "going forward", ...)
/// with a reply-shaping word ("reply", "answer", "format", ...).
class KeywordClassifier : public ClassifierBackend {
 public:
  std::string complete(const std::string& prompt) override;
  static bool judge(std::string_view user_text);
};

/// Chat-completions client: {model, messages:[{role:"user", content}], temperature:0}.
class HttpClassifier : public ClassifierBackend {
 public:
  HttpClassifier(std::string url, std::string model, std::string api_key = {}, RetryPolicy policy = {});
  std::string complete(const std::string& prompt) override;

 private:
  Endpoint endpoint_;
  std::string model_;
  std::string api_key_;
  RetryPolicy policy_;
};

/// Extracts choices[0].message.content (or choices[0].text) from a
/// chat-completions response.
std::string first_choice_text(const json& response);

}  // namespace rhea
