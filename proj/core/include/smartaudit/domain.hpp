// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smartaudit {

// Civil calendar date (proleptic Gregorian), serialized as YYYY-MM-DD.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static Date parse(std::string_view iso);  // throws InvalidArgument
  static std::optional<Date> try_parse(std::string_view iso) noexcept;
  static Date from_days(std::int64_t days_since_epoch) noexcept;

  std::int64_t days_since_epoch() const noexcept;
  std::string to_string() const;
  // "YYYY-MM"
  std::string month_key() const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

bool is_valid_date(int year, int month, int day) noexcept;

// UTC, seconds precision.
using Timestamp = std::chrono::sys_seconds;

std::string format_timestamp(Timestamp ts);
Timestamp parse_timestamp(std::string_view iso);  // accepts YYYY-MM-DDTHH:MM:SSZ or YYYY-MM-DD
Date date_of(Timestamp ts) noexcept;

struct ChecklistItem {
  std::string id;
  std::string text;
  std::string category;
  int severity = 5;
  int detection = 5;
  int base_sample_size = 1;
};

// One audit's checklist; the supplier under audit gives the context for
// recommendation scores.
struct Checklist {
  std::string id;
  std::string supplier_id;
  std::vector<ChecklistItem> items;
};

struct HistoricalIssue {
  std::string id;
  std::string supplier_id;
  std::string item_category;
  std::string description;
  std::string failure_pattern;
  std::vector<std::string> tags;
  int severity = 5;
  Date occurred_on;
  bool failed = false;
};

// A labelled audit outcome, used to train the risk model.
struct AuditObservation {
  std::string supplier_id;
  ChecklistItem item;
  Date audited_on;
  bool failed = false;
};

class Taxonomy {
 public:
  Taxonomy() = default;
  // throws ValidationError on duplicate, empty, or non-lowercase keys
  Taxonomy(std::vector<std::string> categories, std::vector<std::string> failure_patterns);

  // process, material, equipment, method, measurement, environment
  static Taxonomy default_6m();

  const std::vector<std::string>& categories() const noexcept { return categories_; }
  const std::vector<std::string>& failure_patterns() const noexcept { return failure_patterns_; }
  bool has_category(std::string_view key) const noexcept;

 private:
  std::vector<std::string> categories_;
  std::vector<std::string> failure_patterns_;
};

struct QualityScore {
  int root_cause_depth = 0;
  int causal_chain_validity = 0;
  int corrective_action_specificity = 0;
  int evidence_support = 0;
  int overall = 0;

  // throws ValidationError when a dimension is outside [0, 5]
  static QualityScore from_dimensions(int root_cause_depth, int causal_chain_validity,
                                      int corrective_action_specificity, int evidence_support);

  int dimension_sum() const noexcept {
    return root_cause_depth + causal_chain_validity + corrective_action_specificity + evidence_support;
  }

  friend bool operator==(const QualityScore&, const QualityScore&) = default;
};

struct KnowledgeRecord {
  std::string id;
  std::optional<std::string> source_issue_id;
  std::string supplier_id;
  std::string tuned_description;
  std::string failure_pattern;
  std::vector<std::string> tags;
  std::string root_cause;
  std::string corrective_action;
  std::optional<QualityScore> quality;
  std::string content_hash;
  Timestamp created_at{};
  // Set when consolidation found an existing record at or above the
  // near-duplicate similarity threshold.
  std::optional<std::string> near_duplicate_of;
  // Chain-of-density summary rounds, densest last.
  std::vector<std::string> summary_rounds;

  friend bool operator==(const KnowledgeRecord&, const KnowledgeRecord&) = default;
};

// NFC, trimmed, internal whitespace runs collapsed to one space.
std::string canonicalize(std::string_view text);

// SHA-256 over the canonical content fields. Quality, ids, timestamps and
// summaries are excluded.
std::string content_hash(const KnowledgeRecord& record);

std::vector<std::string> record_problems(const KnowledgeRecord& record, const Taxonomy& taxonomy);

// Canonicalizes text fields, sorts and dedups tags, recomputes quality
// overall and content_hash, and assigns an id when none is present.
// throws ValidationError listing every violation.
KnowledgeRecord validate_record(KnowledgeRecord record, const Taxonomy& taxonomy);

std::vector<std::string> checklist_problems(const Checklist& checklist);
std::vector<std::string> factor_problems(const Checklist& checklist);

std::vector<std::string> issue_problems(const HistoricalIssue& issue, const Taxonomy& taxonomy,
                                        Date today);

}  // namespace smartaudit
