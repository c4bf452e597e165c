#pragma once

// Instructional Memory (persistent, deduplicated instruction set) and
// Episodic Memory (append-only turn records with reply latents).

#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "rhea/core.hpp"
#include "rhea/recognizer.hpp"

namespace rhea {

class InstructionalMemoryStore {
 public:
  const std::vector<GlobalInstruction>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(std::string_view text) const { return keys_.count(dedup_key(text)) > 0; }
  std::vector<std::string> texts() const;

  /// Returns false when the dedup key is already present or the text
  /// normalizes to nothing.
  bool insert(GlobalInstruction instruction);

  bool operator==(const InstructionalMemoryStore& o) const { return entries_ == o.entries_; }

 private:
  std::vector<GlobalInstruction> entries_;
  std::unordered_set<std::string> keys_;
};

class EpisodicMemoryStore {
 public:
  const std::vector<EpisodicRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const EpisodicRecord& operator[](std::size_t i) const { return records_.at(i); }

  /// Appends after checking turn order and record invariants.
  void append(EpisodicRecord record);

  bool operator==(const EpisodicMemoryStore&) const = default;

 private:
  std::vector<EpisodicRecord> records_;
};

InstructionalMemoryStore im_update(InstructionalMemoryStore store, const RecognizerVerdict& verdict,
                                   std::string_view user_text, std::uint64_t turn_index);

EpisodicMemoryStore em_append(EpisodicMemoryStore store, Turn turn, LatentMatrix reply_latent,
                              bool is_instruction_turn, const EngineConfig& cfg);

struct SessionSnapshot {
  std::string session_id;
  EngineConfig config;
  InstructionalMemoryStore im;
  EpisodicMemoryStore em;

  bool operator==(const SessionSnapshot&) const = default;
};

SessionSnapshot snapshot(const std::string& session_id, const EngineConfig& cfg, const InstructionalMemoryStore& im,
                         const EpisodicMemoryStore& em);

/// JSONL: line 1 holds the config and IM entries, each further line one
/// EpisodicRecord. The header records the expected record count so that a
/// truncated file is detected.
void write_snapshot(std::ostream& out, const SessionSnapshot& snap);
std::string encode_snapshot(const SessionSnapshot& snap);
void save_snapshot(const std::string& path, const SessionSnapshot& snap);

/// Throws Error(CorruptSnapshot) on any malformed or truncated input.
SessionSnapshot read_snapshot(std::istream& in);
SessionSnapshot decode_snapshot(const std::string& text);
SessionSnapshot load_snapshot(const std::string& path);

}  // namespace rhea
