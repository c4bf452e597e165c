#include "rhea/gateway.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace rhea {

namespace {

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string format_score(double score) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << score;
  return out.str();
}

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
  }
  return id != "." && id != "..";
}

}  // namespace

Session Session::create(std::string id, const EngineConfig& cfg) {
  require_valid(cfg);
  Session s;
  s.id = std::move(id);
  s.cfg = cfg;
  return s;
}

Session Session::restore(const SessionSnapshot& snap) {
  Session s = create(snap.session_id, snap.config);
  s.im = snap.im;
  s.em = snap.em;
  s.turn_counter = snap.em.empty() ? 0 : snap.em.records().back().turn.index;
  s.last_scores.assign(s.em.size(), std::nullopt);
  return s;
}

SessionSnapshot Session::snapshot() const { return rhea::snapshot(id, cfg, im, em); }

json diagnostics_json(const TurnDiagnostics& diag) {
  json records = json::array();
  for (std::size_t i = 0; i < diag.scores.size(); ++i) {
    records.push_back({{"index", diag.score_turns.at(i)},
                       {"score", diag.scores[i].score},
                       {"tier", to_string(diag.scores[i].tier)}});
  }
  json verdict{{"is_global_instruction", diag.verdict.is_global_instruction},
               {"stage", to_string(diag.verdict.stage)}};
  if (diag.verdict.raw_classifier_output) verdict["raw_classifier_output"] = *diag.verdict.raw_classifier_output;
  return json{{"turn", diag.turn},
              {"verdict", std::move(verdict)},
              {"classifier_fallback", diag.classifier_fallback},
              {"records", std::move(records)},
              {"token_cost", diag.token_cost},
              {"im_size", diag.im_size}};
}

std::string trace_line(const TurnDiagnostics& diag) {
  if (diag.scores.empty()) return "turn " + std::to_string(diag.turn) + ": (no history)";
  std::string out;
  for (std::size_t i = 0; i < diag.scores.size(); ++i) {
    if (!out.empty()) out += ", ";
    out += "turn " + std::to_string(diag.score_turns.at(i)) + ": " + std::string(to_string(diag.scores[i].tier)) +
           "(" + format_score(diag.scores[i].score) + ")";
  }
  return out;
}

StepResult step(Session& session, std::string_view user_text, const EngineDeps& deps) {
  if (deps.llm == nullptr || deps.compressor == nullptr) {
    throw Error(ErrorCode::InvalidInput, "engine needs an LLM backend and a compressor");
  }
  if (normalize_instruction(user_text).empty()) throw Error(ErrorCode::InvalidInput, "message is empty");
  const auto& cfg = session.cfg;
  const std::uint64_t turn_index = session.turn_counter + 1;

  TurnDiagnostics diag;
  diag.turn = turn_index;
  try {
    diag.verdict = recognize(user_text, cfg, deps.recognizer);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendUnavailable) throw;
    // Classifier unreachable: the rule stage already said no.
    diag.verdict = {false, VerdictStage::Rule, std::nullopt};
    diag.classifier_fallback = true;
  }
  auto im = im_update(session.im, diag.verdict, user_text, turn_index);

  // Scored against history only; the current turn enters EM after the reply.
  diag.scores = retrieve(user_text, session.em, *deps.compressor, cfg);
  for (const auto& s : diag.scores) diag.score_turns.push_back(session.em[s.record_index].turn.index);

  auto ctx = enforce_budget(assemble(im, diag.scores, session.em, user_text, cfg), cfg);
  diag.token_cost = context_cost(ctx, cfg);
  const auto payload = render(ctx, cfg.render_mode);

  auto reply = deps.llm->reply(payload);
  if (normalize_instruction(reply).empty()) throw Error(ErrorCode::BackendUnavailable, "LLM returned an empty reply");

  Turn turn{turn_index, std::string(user_text), reply, deps.clock ? deps.clock() : system_now_ms()};
  auto latent = deps.compressor->compress(reply);
  auto em = em_append(session.em, std::move(turn), std::move(latent), diag.verdict.is_global_instruction, cfg);

  // Commit.
  session.im = std::move(im);
  session.em = std::move(em);
  session.turn_counter = turn_index;
  session.last_scores.resize(session.em.size());
  for (const auto& s : diag.scores) session.last_scores[s.record_index] = s;
  diag.im_size = session.im.size();
  return {std::move(reply), std::move(diag)};
}

SessionManager::SessionManager(EngineConfig cfg, EngineDeps deps, std::optional<std::string> snapshot_dir,
                               BusyPolicy busy)
    : cfg_(cfg), deps_(std::move(deps)), snapshot_dir_(std::move(snapshot_dir)), busy_(busy) {
  require_valid(cfg_);
  if (snapshot_dir_) std::filesystem::create_directories(*snapshot_dir_);
}

std::string SessionManager::snapshot_path(const std::string& session_id) const {
  return (std::filesystem::path(*snapshot_dir_) / (session_id + ".jsonl")).string();
}

std::shared_ptr<SessionManager::Slot> SessionManager::slot_for(const std::string& session_id, bool create) {
  if (!valid_session_id(session_id)) throw Error(ErrorCode::InvalidInput, "invalid session id");
  std::lock_guard lock(map_mu_);
  if (auto it = slots_.find(session_id); it != slots_.end()) return it->second;
  std::optional<Session> restored;
  if (snapshot_dir_ && std::filesystem::exists(snapshot_path(session_id))) {
    restored = Session::restore(load_snapshot(snapshot_path(session_id)));
  }
  if (!restored && !create) return nullptr;
  auto slot = std::make_shared<Slot>();
  slot->session = restored ? std::move(*restored) : Session::create(session_id, cfg_);
  slots_.emplace(session_id, slot);
  return slot;
}

std::optional<StepResult> SessionManager::chat(const std::string& session_id, std::string_view message) {
  if (normalize_instruction(message).empty()) throw Error(ErrorCode::InvalidInput, "message is empty");
  auto slot = slot_for(session_id, true);
  std::unique_lock lock(slot->mu, std::defer_lock);
  if (busy_ == BusyPolicy::Reject) {
    if (!lock.try_lock()) return std::nullopt;
  } else {
    lock.lock();
  }
  auto result = step(slot->session, message, deps_);
  if (snapshot_dir_) save_snapshot(snapshot_path(session_id), slot->session.snapshot());
  return result;
}

std::optional<Session> SessionManager::get(const std::string& session_id) {
  auto slot = slot_for(session_id, false);
  if (!slot) return std::nullopt;
  std::lock_guard lock(slot->mu);
  return slot->session;
}

bool SessionManager::remove(const std::string& session_id) {
  if (!valid_session_id(session_id)) return false;
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard lock(map_mu_);
    if (auto it = slots_.find(session_id); it != slots_.end()) {
      slot = it->second;
      slots_.erase(it);
    }
  }
  bool removed = slot != nullptr;
  if (snapshot_dir_) {
    std::error_code ec;
    removed = std::filesystem::remove(snapshot_path(session_id), ec) || removed;
  }
  return removed;
}

json memory_json(const Session& session) {
  json instructions = json::array();
  for (const auto& e : session.im.entries()) instructions.push_back(e.text);
  json records = json::array();
  for (std::size_t i = 0; i < session.em.size(); ++i) {
    json r{{"index", session.em[i].turn.index}, {"tier_last", nullptr}, {"score_last", nullptr}};
    if (i < session.last_scores.size() && session.last_scores[i]) {
      r["tier_last"] = to_string(session.last_scores[i]->tier);
      r["score_last"] = session.last_scores[i]->score;
    }
    records.push_back(std::move(r));
  }
  return json{{"session_id", session.id},
              {"turn_counter", session.turn_counter},
              {"instructions", std::move(instructions)},
              {"records", std::move(records)}};
}

void repl(std::istream& in, std::ostream& out, const EngineConfig& cfg, const EngineDeps& deps,
          const ReplOptions& options) {
  Session session = Session::create(options.session_id, cfg);
  std::string line;
  while (std::getline(in, line)) {
    const auto text = normalize_instruction(line);
    if (text.empty()) continue;
    try {
      if (text == ":quit" || text == ":exit") break;
      if (text == ":im") {
        if (session.im.size() == 0) out << "(no instructions)\n";
        for (const auto& e : session.im.entries()) out << e.text << '\n';
        continue;
      }
      if (text.starts_with(":save ")) {
        const auto path = text.substr(6);
        save_snapshot(path, session.snapshot());
        out << "saved " << session.em.size() << " turns to " << path << '\n';
        continue;
      }
      if (text.starts_with(":load ")) {
        const auto path = text.substr(6);
        session = Session::restore(load_snapshot(path));
        out << "loaded " << session.em.size() << " turns from " << path << '\n';
        continue;
      }
      if (text.starts_with(':')) {
        out << "unknown command: " << text << '\n';
        continue;
      }
      auto result = step(session, line, deps);
      out << result.reply << '\n';
      if (options.trace) out << trace_line(result.diagnostics) << '\n';
    } catch (const std::exception& e) {
      out << "error: " << e.what() << '\n';
    }
  }
}

}  // namespace rhea
