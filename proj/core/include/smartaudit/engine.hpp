// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "smartaudit/agent.hpp"
#include "smartaudit/config.hpp"
#include "smartaudit/copilot.hpp"
#include "smartaudit/domain.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/llm_gateway.hpp"
#include "smartaudit/risk_engine.hpp"
#include "smartaudit/store.hpp"

namespace smartaudit {

struct EngineOptions {
  store::LoadMode load_mode = store::LoadMode::prefer_snapshot;
  // Replace the configured backends (tests, scripted runs).
  std::shared_ptr<llm::LlmBackend> backend;
  std::shared_ptr<const llm::Embedder> embedder;
  // Sink for load warnings; stderr when unset.
  std::function<void(const std::string&)> warn;
};

enum class FindingStatus { stored, duplicate, near_duplicate, quarantined };
std::string_view to_string(FindingStatus status) noexcept;

struct FindingResult {
  FindingStatus status = FindingStatus::stored;
  std::optional<KnowledgeRecord> record;
  std::optional<std::string> duplicate_of;
  std::optional<store::QuarantineEntry> quarantine;
  // Set for quarantined findings whose processing failed in the gateway.
  bool gateway_failure = false;
};

nlohmann::json to_json(const FindingResult& result);

struct IngestSummary {
  std::size_t ingested = 0;
  std::size_t duplicates = 0;
  std::size_t near_duplicates = 0;  // included in ingested
  std::size_t quarantined = 0;

  std::string line() const;  // "ingested N, duplicates D, quarantined Q"
};

// The application facade. Reads run concurrently against published
// snapshots; every write goes through one mutex so the log, the indexes and
// the published state move together.
class Engine {
 public:
  static std::unique_ptr<Engine> open(const std::filesystem::path& data_dir, Config config,
                                      EngineOptions options = {});
  ~Engine();

  const Config& config() const noexcept { return config_; }
  const Taxonomy& taxonomy() const noexcept { return taxonomy_; }
  const store::DataFiles& files() const noexcept { return store_->files(); }
  llm::Gateway& gateway() noexcept { return *gateway_; }
  const llm::Embedder& embedder() const noexcept { return *embedder_; }
  std::shared_ptr<const copilot::KnowledgeState> knowledge() const { return kb_.snapshot(); }
  std::shared_ptr<const risk::HistoryIndex> history() const;
  std::shared_ptr<const risk::RiskModel> model() const;
  std::optional<std::uint64_t> snapshot_used() const noexcept { return snapshot_used_; }

  // ---- planning ----
  // throws ValidationError (structure) or FactorOutOfRange (S/D range)
  std::vector<risk::RiskAssessment> plan(const Checklist& checklist,
                                       std::optional<std::size_t> top_n = std::nullopt) const;
  // Retrains from audits.jsonl (or the given samples) and publishes the model.
  risk::RiskModel train();

  // ---- ingestion ----
  // throws ValidationError when free_text is empty; every other failure is
  // quarantined and reported in the result.
  FindingResult submit_finding(const copilot::RawFinding& raw);
  // One JSON RawFinding per line; malformed lines are quarantined.
  IngestSummary ingest_file(const std::filesystem::path& path);
  void add_history(const std::vector<HistoricalIssue>& issues);
  void add_audits(const std::vector<AuditObservation>& observations);

  // ---- copilot ----
  std::vector<copilot::SearchHit> search(std::string_view query, copilot::SearchMode mode, std::size_t k,
                                         const copilot::SearchFilters& filters = {}) const;
  // Scores the record and appends a new version carrying the score.
  QualityScore evaluate(const std::string& record_id);
  // throws NotFoundError when the supplier appears nowhere in the data
  copilot::Scorecard scorecard(const std::string& supplier_id) const;

  // ---- agent ----
  agent::CommonalityTable commonality(agent::GroupBy group_by, const copilot::SearchFilters& filters = {}) const;
  agent::TrendSeries trend(const copilot::SearchFilters& filters = {}) const;
  std::string next_session_id();
  agent::AgentSession run_agent(std::string_view request, const agent::SessionOptions& options);
  agent::AgentSession run_agent(std::string_view request);
  agent::AgentSession session(const std::string& id) const;  // throws NotFoundError
  agent::ToolContext tool_context() const;
  const agent::ToolRegistry& tools() const noexcept { return tools_; }

  // ---- store ----
  store::SnapshotInfo snapshot();
  // Deterministic dump of the knowledge base (id order).
  nlohmann::json state_json() const;

 private:
  Engine(Config config, store::DataFiles files, EngineOptions options);
  void rebuild_history(std::vector<HistoricalIssue> issues);
  FindingResult quarantine(nlohmann::json raw, std::string stage, std::string reason, bool gateway_failure);

  Config config_;
  EngineOptions options_;
  Taxonomy taxonomy_;
  std::shared_ptr<const llm::Embedder> embedder_;
  std::unique_ptr<llm::Gateway> gateway_;
  std::unique_ptr<store::Store> store_;
  agent::ToolRegistry tools_;

  mutable std::mutex writer_;
  text::SnapshotCell<copilot::KnowledgeState> kb_;

  mutable std::mutex published_;
  std::shared_ptr<const std::vector<HistoricalIssue>> history_issues_;
  std::shared_ptr<const risk::HistoryIndex> history_;
  std::shared_ptr<const risk::RiskModel> model_;
  std::vector<AuditObservation> audits_;
  std::vector<std::string> known_suppliers_;
  std::optional<std::uint64_t> snapshot_used_;
  std::atomic<std::uint64_t> session_counter_{0};
};

}  // namespace smartaudit
