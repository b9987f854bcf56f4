// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartaudit/domain.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/index_snapshot.hpp"
#include "smartaudit/llm_gateway.hpp"
#include "smartaudit/text_index.hpp"

namespace smartaudit::copilot {

struct RawFinding {
  std::string supplier_id;
  std::optional<std::string> item_id;
  std::string free_text;
  std::vector<std::string> attachments;
  Timestamp submitted_at{};
  // Auditors often know these at submission time; they flow into the record
  // unchanged (after canonicalization).
  std::optional<std::string> root_cause;
  std::optional<std::string> corrective_action;
  std::optional<std::string> source_issue_id;

  friend bool operator==(const RawFinding&, const RawFinding&) = default;
};

struct CodSummary {
  std::string record_id;
  std::vector<std::string> rounds;
  std::vector<double> final_embedding;
};

struct CopilotConfig {
  int cod_rounds = 3;
  int cod_max_tokens = 60;
  double near_duplicate_threshold = 0.95;
  text::HybridParams hybrid;
};

// tune_description, extract_pattern, assign_tags. throws GatewayError or
// ValidationError; the caller decides where the raw finding goes.
KnowledgeRecord process_finding(const RawFinding& raw, llm::Gateway& gateway, const Taxonomy& taxonomy);

CodSummary summarize_cod(const KnowledgeRecord& record, llm::Gateway& gateway, const llm::Embedder& embedder,
                         int rounds = 3, int max_tokens = 60);

// throws GatewayError(schema_violation) when the judge stays out of range
// after the reprompt.
QualityScore evaluate_quality(const KnowledgeRecord& record, llm::Gateway& gateway);

enum class SearchMode { hybrid, bm25, semantic };

std::string_view to_string(SearchMode mode) noexcept;
SearchMode parse_search_mode(std::string_view s);  // throws InvalidArgument("unknown mode: ...")

struct SearchFilters {
  std::optional<std::string> supplier;
  // A record must carry every listed tag.
  std::vector<std::string> tags;
  // Inclusive bounds on the record's created_at date.
  std::optional<Date> from;
  std::optional<Date> to;

  bool matches(const KnowledgeRecord& record) const;
  bool empty() const noexcept { return !supplier && tags.empty() && !from && !to; }
};

struct SearchHit {
  std::string record_id;
  double score = 0.0;
  // Raw channel scores for the record, whatever the mode.
  double bm25 = 0.0;
  double semantic = 0.0;
  std::size_t rank = 0;  // 1-based
  KnowledgeRecord record;
};

// Everything readers need, copied as a unit so a published snapshot is
// internally consistent.
class KnowledgeState {
 public:
  explicit KnowledgeState(std::size_t dimension = 64);

  std::size_t size() const noexcept { return records_.size(); }
  bool contains(const std::string& id) const noexcept { return records_.count(id) != 0; }
  const KnowledgeRecord& record(const std::string& id) const;  // throws NotFoundError
  const KnowledgeRecord* find(const std::string& id) const noexcept;
  const KnowledgeRecord* find_by_hash(const std::string& content_hash) const noexcept;
  // id order
  const std::map<std::string, KnowledgeRecord>& records() const noexcept { return records_; }
  std::vector<const KnowledgeRecord*> filtered(const SearchFilters& filters) const;

  // Inserts a new record or replaces an existing version with the same id.
  void upsert(const KnowledgeRecord& record, const llm::Embedder& embedder);

  const text::Bm25Index& bm25() const noexcept { return bm25_; }
  const text::VectorIndex& full_vectors() const noexcept { return full_; }
  const text::VectorIndex& summary_vectors() const noexcept { return summary_; }

  // Index contents for a snapshot file; records themselves live in the log.
  text::IndexSnapshotData export_indexes() const;
  // Rebuilds a state from snapshot indexes and the records they cover,
  // without embedding anything. throws StorageError when the two disagree.
  static KnowledgeState restore(const text::IndexSnapshotData& data, const std::vector<KnowledgeRecord>& records);

  // Semantic channel: max of full-text and summary cosine, positive only.
  double semantic_score(const std::string& id, std::span<const double> query) const;
  text::RankedList semantic_search(std::span<const double> query, std::size_t k,
                                   const text::DocFilter& filter = {}) const;

 private:
  std::map<std::string, KnowledgeRecord> records_;
  std::map<std::string, std::string> by_hash_;
  text::Bm25Index bm25_;
  text::VectorIndex full_;
  text::VectorIndex summary_;
};

// The text the full-text embedding and BM25 both index.
std::string indexed_text(const KnowledgeRecord& record);
std::string summary_text(const KnowledgeRecord& record);

std::vector<SearchHit> search_knowledge(const KnowledgeState& state, const llm::Embedder& embedder,
                                        std::string_view query, SearchMode mode, std::size_t k,
                                        const SearchFilters& filters = {}, const text::HybridParams& params = {});

enum class DedupStatus { stored, duplicate, near_duplicate };
std::string_view to_string(DedupStatus status) noexcept;

struct ConsolidationPlan {
  DedupStatus status = DedupStatus::stored;
  // For duplicate: the existing record. Otherwise the record to store.
  KnowledgeRecord record;
  std::optional<std::string> near_duplicate_of;
  double best_similarity = 0.0;
};

// Decides what consolidation would do without touching the state, so the
// caller can persist first and apply afterwards.
ConsolidationPlan plan_consolidation(const KnowledgeState& state, KnowledgeRecord record,
                                     const llm::Embedder& embedder, double near_duplicate_threshold = 0.95);

// plan_consolidation followed by upsert of anything new.
ConsolidationPlan consolidate(KnowledgeState& state, KnowledgeRecord record, const llm::Embedder& embedder,
                              double near_duplicate_threshold = 0.95);

struct MonthlyQuality {
  std::string month;  // YYYY-MM
  std::size_t count = 0;
  double mean_overall = 0.0;

  friend bool operator==(const MonthlyQuality&, const MonthlyQuality&) = default;
};

struct Scorecard {
  std::string supplier_id;
  std::size_t record_count = 0;
  // Records carrying a quality score; the means cover these only.
  std::size_t count = 0;
  double mean_overall = 0.0;
  double mean_root_cause_depth = 0.0;
  double mean_causal_chain_validity = 0.0;
  double mean_corrective_action_specificity = 0.0;
  double mean_evidence_support = 0.0;
  std::vector<MonthlyQuality> trend;

  friend bool operator==(const Scorecard&, const Scorecard&) = default;
};

Scorecard supplier_scorecard(const std::string& supplier_id, const KnowledgeState& state);

}  // namespace smartaudit::copilot
