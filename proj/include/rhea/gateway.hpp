#pragma once

// Per-turn pipeline: recognize -> IM update -> retrieve -> assemble ->
// budget -> render -> LLM -> compress reply -> EM append. A turn either
// completes or leaves the session untouched.

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rhea/assembler.hpp"
#include "rhea/compressor.hpp"
#include "rhea/llm.hpp"
#include "rhea/memory.hpp"
#include "rhea/recognizer.hpp"
#include "rhea/retrieval.hpp"

namespace rhea {

struct Session {
  std::string id;
  EngineConfig cfg;
  InstructionalMemoryStore im;
  EpisodicMemoryStore em;
  std::uint64_t turn_counter = 0;
  // Parallel to em.records(): outcome of the most recent retrieval.
  std::vector<std::optional<ScoredRecord>> last_scores;

  static Session create(std::string id, const EngineConfig& cfg);
  static Session restore(const SessionSnapshot& snap);
  SessionSnapshot snapshot() const;
};

struct TurnDiagnostics {
  std::uint64_t turn = 0;
  RecognizerVerdict verdict;
  bool classifier_fallback = false;
  std::vector<ScoredRecord> scores;  // record_index -> em position
  std::vector<std::uint64_t> score_turns;  // turn index for each entry of `scores`
  std::size_t token_cost = 0;
  std::size_t im_size = 0;

  bool operator==(const TurnDiagnostics&) const = default;
};

json diagnostics_json(const TurnDiagnostics& diag);

/// "turn 1: FORGET(0.12), turn 2: HIGH(0.86)"
std::string trace_line(const TurnDiagnostics& diag);

struct StepResult {
  std::string reply;
  TurnDiagnostics diagnostics;
};

struct EngineDeps {
  LlmBackend* llm = nullptr;
  const Compressor* compressor = nullptr;
  RecognizerSetup recognizer;
  std::function<std::int64_t()> clock;  // unix ms; system clock when empty
};

StepResult step(Session& session, std::string_view user_text, const EngineDeps& deps);

enum class BusyPolicy { Wait, Reject };

/// Sessions keyed by id, each guarded by its own mutex. With a snapshot
/// directory, sessions are restored on first use and saved after every turn.
class SessionManager {
 public:
  SessionManager(EngineConfig cfg, EngineDeps deps, std::optional<std::string> snapshot_dir = std::nullopt,
                 BusyPolicy busy = BusyPolicy::Wait);

  /// Throws Error(InvalidInput) on empty text; returns nullopt when the
  /// session is busy under BusyPolicy::Reject.
  std::optional<StepResult> chat(const std::string& session_id, std::string_view message);

  /// Copy of the session state, or nullopt when unknown.
  std::optional<Session> get(const std::string& session_id);
  bool remove(const std::string& session_id);

 private:
  struct Slot {
    std::mutex mu;
    Session session;
  };

  std::shared_ptr<Slot> slot_for(const std::string& session_id, bool create);
  std::string snapshot_path(const std::string& session_id) const;

  EngineConfig cfg_;
  EngineDeps deps_;
  std::optional<std::string> snapshot_dir_;
  BusyPolicy busy_;
  std::mutex map_mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

json memory_json(const Session& session);

struct ReplOptions {
  bool trace = false;
  std::string session_id = "repl";
};

/// Line-oriented chat loop. Commands: ":im", ":save <file>", ":load <file>",
/// ":quit". Errors are printed and the loop continues.
void repl(std::istream& in, std::ostream& out, const EngineConfig& cfg, const EngineDeps& deps,
          const ReplOptions& options);

}  // namespace rhea
