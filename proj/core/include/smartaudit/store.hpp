// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smartaudit/agent.hpp"
#include "smartaudit/copilot.hpp"
#include "smartaudit/domain.hpp"
#include "smartaudit/embedder.hpp"

namespace smartaudit::store {

namespace fs = std::filesystem;

struct JsonlLine {
  std::size_t line_number = 0;  // 1-based
  std::uint64_t offset = 0;     // byte offset of the line start
  nlohmann::json value;
};

struct JsonlContents {
  std::vector<JsonlLine> lines;
  // Bytes up to and including the last complete line.
  std::uint64_t valid_bytes = 0;
  std::vector<std::string> warnings;
};

// A torn (unterminated, unparsable) final line is reported as a warning and
// left out. Any other bad line throws StorageError("<file>:<n> malformed").
JsonlContents read_jsonl(const fs::path& path);

// Append-only JSONL writer. Each append is flushed and fsynced before it
// returns. Opening drops a torn final line left by an interrupted append.
class JsonlWriter {
 public:
  explicit JsonlWriter(fs::path path);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  // Returns the byte offset the line starts at.
  std::uint64_t append(const nlohmann::json& value);
  std::uint64_t size_bytes() const noexcept { return size_; }
  std::uint64_t lines() const noexcept { return lines_; }
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
  std::uint64_t lines_ = 0;
};

struct QuarantineEntry {
  std::string id;       // q-000001
  std::string stage;    // parse | process | summarize | consolidate
  std::string reason;
  nlohmann::json raw;   // the finding as submitted (or the raw line text)
};

nlohmann::json to_json(const QuarantineEntry& q);
QuarantineEntry quarantine_from_json(const nlohmann::json& j);

struct SnapshotInfo {
  std::uint64_t sequence = 0;
  fs::path file;
  std::uint64_t record_count = 0;
};

struct DataFiles {
  fs::path root;
  fs::path records() const { return root / "records.jsonl"; }
  fs::path history() const { return root / "history.jsonl"; }
  fs::path checklists() const { return root / "checklists.jsonl"; }
  fs::path audits() const { return root / "audits.jsonl"; }
  fs::path quarantine() const { return root / "quarantine.jsonl"; }
  fs::path sessions() const { return root / "sessions"; }
  fs::path snapshots() const { return root / "snapshots"; }
  fs::path config() const { return root / "config.toml"; }
  fs::path taxonomy() const { return root / "taxonomy.json"; }
  fs::path fixtures() const { return root / "llm_fixtures.jsonl"; }
  fs::path session_file(const std::string& id) const { return sessions() / (id + ".jsonl"); }
};

enum class LoadMode { full_replay, prefer_snapshot };

struct LoadedState {
  copilot::KnowledgeState kb{64};
  std::vector<HistoricalIssue> history;
  std::vector<Checklist> checklists;
  std::vector<AuditObservation> audits;
  std::vector<QuarantineEntry> quarantine;
  std::uint64_t record_lines = 0;
  std::uint64_t record_bytes = 0;
  std::optional<std::uint64_t> snapshot_used;
  std::vector<std::string> warnings;
};

LoadedState load(const DataFiles& files, const llm::Embedder& embedder, LoadMode mode = LoadMode::prefer_snapshot);

// Existing snapshots, ascending sequence.
std::vector<SnapshotInfo> list_snapshots(const DataFiles& files);

// Durable side of the engine. Not thread-safe; the engine serializes calls.
class Store {
 public:
  explicit Store(DataFiles files, std::size_t snapshot_retention = 2);

  const DataFiles& files() const noexcept { return files_; }

  std::uint64_t append_record(const KnowledgeRecord& record);
  std::uint64_t append_history(const HistoricalIssue& issue);
  std::uint64_t append_checklist(const Checklist& checklist);
  std::uint64_t append_audit(const AuditObservation& observation);
  // Assigns the next quarantine id when entry.id is empty.
  QuarantineEntry append_quarantine(QuarantineEntry entry);

  std::uint64_t record_lines() const noexcept { return records_.lines(); }
  std::uint64_t record_bytes() const noexcept { return records_.size_bytes(); }

  // Writes snapshots/<next>.afix atomically and prunes beyond retention.
  SnapshotInfo snapshot(const copilot::KnowledgeState& kb);

  // One step per line, then a final line with the session outcome.
  void save_session(const agent::AgentSession& session);
  agent::AgentSession load_session(const std::string& id) const;  // throws NotFoundError
  std::vector<std::string> session_ids() const;

 private:
  DataFiles files_;
  std::size_t retention_;
  JsonlWriter records_;
  JsonlWriter history_;
  JsonlWriter checklists_;
  JsonlWriter audits_;
  JsonlWriter quarantine_;
};

}  // namespace smartaudit::store
