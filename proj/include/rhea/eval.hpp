#pragma once

// Offline evaluation harness: synthetic instruction-decay scenarios, a
// scripted backend with a hard attention budget, context strategies,
// adherence metrics, recognizer error simulation and threshold sweeps.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rhea/codec.hpp"
#include "rhea/llm.hpp"
#include "rhea/memory.hpp"

namespace rhea {

// ---------------------------------------------------------------- scenarios

struct Predicate {
  DirectiveKind kind = DirectiveKind::StartsWith;
  std::string token;

  bool check(std::string_view reply) const { return satisfies(reply, {kind, token}); }
  bool operator==(const Predicate&) const = default;
};

struct SyntheticScenario {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t instruction_turn = 1;  // 1-based position in `turns`
  std::string instruction;           // the directive sentence inside that turn
  Predicate predicate;
  std::vector<std::string> turns;    // every user turn, instruction turn included

  bool operator==(const SyntheticScenario&) const = default;
};

/// Throws Error(InvalidInput) when the scenario is inconsistent.
void validate_scenario(const SyntheticScenario& scenario);

void to_json(json& j, const SyntheticScenario& s);
SyntheticScenario scenario_from_json(const json& j);
SyntheticScenario load_scenario(const std::string& path);

struct ScenarioParams {
  std::size_t turns = 60;
  std::size_t distractor_tokens = 40;
};

/// Deterministic scenario for `seed`. Even seeds use instructions phrased
/// to hit the default rule set; odd seeds use phrasings only a classifier
/// catches.
SyntheticScenario builtin_scenario(std::uint64_t seed, const ScenarioParams& params = {});

/// The ten scenarios (seeds 0..9) used for the comparison runs.
std::vector<SyntheticScenario> shipped_scenarios();

// ------------------------------------------------------------ scripted LLM

struct ScriptedLlmParams {
  std::size_t attention_budget = 512;  // P
  std::size_t reply_tokens = 80;       // L_r
};

/// Obeys a directive only if it lies inside the first P tokens of the
/// payload read in attention order: system block, current query, then the
/// earlier messages newest first. Each latent attachment occupies n tokens
/// next to its turn's user message. Replies are L_r tokens echoing the query.
class ScriptedLlm : public LlmBackend {
 public:
  explicit ScriptedLlm(ScriptedLlmParams params = {}) : params_(params) {}
  std::string reply(const BackendPayload& payload) override;

  std::vector<std::string> visible_tokens(const BackendPayload& payload) const;
  const ScriptedLlmParams& params() const { return params_; }

 private:
  ScriptedLlmParams params_;
};

// ---------------------------------------------------------------- metrics

/// Fraction of replies satisfying the predicate. Throws Error(EmptyRun).
double iar(const std::vector<std::string>& replies, const Predicate& predicate);

/// 1 iff the trimmed strings are byte-equal.
int jga(std::string_view final_answer, std::string_view gold);

/// Okapi BM25 (k1 = 1.2, b = 0.75) over lowercased whitespace tokens, one
/// document per record (user text + reply). Top-k in chronological order;
/// ties go to the lower index.
std::vector<std::size_t> bm25_retrieve(std::string_view query, const EpisodicMemoryStore& em, std::size_t k);

// ------------------------------------------------------------- strategies

enum class StrategyKind { Vanilla, RecentK, Bm25, RheaFull, RheaNoIM, RheaPreserve, RheaAbandon };

struct Strategy {
  StrategyKind kind = StrategyKind::RheaFull;
  std::size_t k = 5;  // RecentK / Bm25 only

  bool operator==(const Strategy&) const = default;
};

/// "vanilla", "recent-k[:K]", "bm25[:K]", "rhea-full", "rhea-no-im",
/// "rhea-preserve", "rhea-abandon".
Strategy parse_strategy(std::string_view text);
std::string to_string(const Strategy& strategy);

enum class RecognizerSim { Oracle, RealRules, Hybrid, ForcedFN, ForcedFP };

RecognizerSim parse_recognizer_sim(std::string_view text);
std::string_view to_string(RecognizerSim sim);

struct BenchmarkOptions {
  RecognizerSim recognizer = RecognizerSim::Oracle;
  ScriptedLlmParams llm;
  std::size_t mock_dim = 256;
  std::uint64_t mock_seed = 0;
  // Share of the run, counted from the end, that final_iar averages over.
  double final_window = 1.0;
};

struct BenchmarkResult {
  std::vector<int> iar_curve;  // one obedience bit per turn
  double final_iar = 0.0;
  std::vector<std::string> replies;
  std::size_t im_size = 0;
};

json to_json(const BenchmarkResult& r);

/// Mean obedience over the last ceil(final_window * L) turns after the
/// instruction turn.
double final_iar(const std::vector<int>& curve, std::size_t instruction_turn, double final_window);

BenchmarkResult run_benchmark(const SyntheticScenario& scenario, const Strategy& strategy, const EngineConfig& cfg,
                              const BenchmarkOptions& options = {});

/// RheaFull under the given recognizer behaviour.
double simulate_recognizer_errors(RecognizerSim mode, const SyntheticScenario& scenario, const EngineConfig& cfg,
                                  BenchmarkOptions options = {});

struct ThresholdGrid {
  std::vector<double> tau_lows;
  std::vector<double> tau_highs;
};

/// "0.3,0.4,0.5:0.7,0.8" -> lows {0.3,0.4,0.5}, highs {0.7,0.8}.
ThresholdGrid parse_grid(std::string_view spec);

struct SweepResult {
  ThresholdGrid grid;
  std::vector<std::vector<double>> cells;  // [low][high], mean final_iar over scenarios
};

/// One benchmark run per (cell, scenario) with RheaFull. Throws
/// Error(InvalidGrid) when the grid is empty or any pair has low > high.
SweepResult threshold_sweep(const ThresholdGrid& grid, const std::vector<SyntheticScenario>& scenarios,
                            const EngineConfig& cfg, const BenchmarkOptions& options = {});

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

/// Population variance.
double variance(const std::vector<double>& values);

}  // namespace rhea
