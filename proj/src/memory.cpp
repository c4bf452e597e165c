#include "rhea/memory.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rhea/codec.hpp"

namespace rhea {

std::vector<std::string> InstructionalMemoryStore::texts() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.text);
  return out;
}

bool InstructionalMemoryStore::insert(GlobalInstruction instruction) {
  instruction.text = normalize_instruction(instruction.text);
  if (instruction.text.empty()) return false;
  auto key = dedup_key(instruction.text);
  if (!keys_.insert(std::move(key)).second) return false;
  entries_.push_back(std::move(instruction));
  return true;
}

void EpisodicMemoryStore::append(EpisodicRecord record) {
  validate_record(record);
  if (!records_.empty() && record.turn.index <= records_.back().turn.index) {
    throw Error(ErrorCode::InvalidInput, "episodic records must have strictly increasing turn indices");
  }
  records_.push_back(std::move(record));
}

InstructionalMemoryStore im_update(InstructionalMemoryStore store, const RecognizerVerdict& verdict,
                                   std::string_view user_text, std::uint64_t turn_index) {
  if (normalize_instruction(user_text).empty()) throw Error(ErrorCode::InvalidInput, "user_text is empty");
  if (!verdict.is_global_instruction) return store;
  const auto by = verdict.stage == VerdictStage::Rule ? RecognizedBy::Rule : RecognizedBy::Classifier;
  store.insert({std::string(user_text), turn_index, by});
  return store;
}

EpisodicMemoryStore em_append(EpisodicMemoryStore store, Turn turn, LatentMatrix reply_latent,
                              bool is_instruction_turn, const EngineConfig& cfg) {
  if (turn.model_text.empty()) throw Error(ErrorCode::InvalidInput, "cannot append a turn without a reply");
  if (reply_latent.n() != cfg.budget_n) {
    throw Error(ErrorCode::BudgetMismatch, "reply latent has n=" + std::to_string(reply_latent.n()) +
                                               " but budget_n=" + std::to_string(cfg.budget_n));
  }
  store.append({std::move(turn), std::move(reply_latent), is_instruction_turn});
  return store;
}

SessionSnapshot snapshot(const std::string& session_id, const EngineConfig& cfg, const InstructionalMemoryStore& im,
                         const EpisodicMemoryStore& em) {
  return {session_id, cfg, im, em};
}

void write_snapshot(std::ostream& out, const SessionSnapshot& snap) {
  json header{{"format", "rhea-session/1"},
              {"session_id", snap.session_id},
              {"config", snap.config},
              {"instructions", snap.im.entries()},
              {"record_count", snap.em.size()}};
  out << header.dump() << '\n';
  for (const auto& r : snap.em.records()) out << json(r).dump() << '\n';
}

std::string encode_snapshot(const SessionSnapshot& snap) {
  std::ostringstream out;
  write_snapshot(out, snap);
  return out.str();
}

void save_snapshot(const std::string& path, const SessionSnapshot& snap) {
  // Readers only ever see a complete file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::NotFound, "cannot write snapshot: " + tmp);
    write_snapshot(out, snap);
    if (!out.flush()) throw Error(ErrorCode::NotFound, "failed writing snapshot: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SessionSnapshot read_snapshot(std::istream& in) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::CorruptSnapshot, why); };
  std::string line;
  if (!std::getline(in, line)) throw corrupt("missing header line");
  SessionSnapshot snap;
  std::size_t expected = 0;
  try {
    const auto header = json::parse(line);
    if (header.value("format", "") != "rhea-session/1") throw corrupt("unknown snapshot format");
    snap.session_id = header.at("session_id").get<std::string>();
    from_json(header.at("config"), snap.config);
    if (auto err = validate_config(snap.config)) throw corrupt(std::string("invalid config: ") + err->what());
    for (const auto& e : header.at("instructions")) {
      if (!snap.im.insert(e.get<GlobalInstruction>())) throw corrupt("duplicate instruction in snapshot");
    }
    expected = header.at("record_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw corrupt(std::string("bad header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptSnapshot) throw;
    throw corrupt(std::string("bad header: ") + e.what());
  }
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++lines;
    try {
      auto record = json::parse(line).get<EpisodicRecord>();
      if (record.reply_latent && record.reply_latent->n() != snap.config.budget_n) {
        throw corrupt("record latent does not match budget_n");
      }
      snap.em.append(std::move(record));
    } catch (const json::exception& e) {
      throw corrupt("bad record line " + std::to_string(lines) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CorruptSnapshot) throw;
      throw corrupt("bad record line " + std::to_string(lines) + ": " + e.what());
    }
  }
  if (lines != expected) {
    throw corrupt("expected " + std::to_string(expected) + " records, found " + std::to_string(lines));
  }
  return snap;
}

SessionSnapshot decode_snapshot(const std::string& text) {
  std::istringstream in(text);
  return read_snapshot(in);
}

SessionSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open snapshot: " + path);
  return read_snapshot(in);
}

}  // namespace rhea
