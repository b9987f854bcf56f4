// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartaudit/domain.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/text_index.hpp"

namespace smartaudit::risk {

enum class Tier { high, medium, low };

std::string_view to_string(Tier tier) noexcept;
Tier parse_tier(std::string_view s);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 500;
};

struct RiskConfig {
  int tier_high = 200;   // rpn >= tier_high -> high
  int tier_medium = 80;  // tier_medium <= rpn < tier_high -> medium
  double multiplier_high = 2.0;
  double multiplier_medium = 1.0;
  double multiplier_low = 0.5;
  double link_threshold = 0.35;
  std::size_t max_links = 10;
  // priority = (1 - blend) * model + blend * recommendation
  double blend_weight = 0.5;
  std::size_t top_n = 5;
  std::size_t recommend_neighbours = 5;
  double recency_scale_days = 365.0;
  TrainConfig train;
};

struct IssueLink {
  std::string item_id;
  std::string issue_id;
  double similarity = 0.0;

  friend bool operator==(const IssueLink&, const IssueLink&) = default;
};

inline constexpr std::size_t kFeatureCount = 4;
// rpn / 1000, supplier failure rate, recency of the newest linked failure,
// linked failures / max_links
using Features = std::array<double, kFeatureCount>;

struct RiskAssessment {
  std::string item_id;
  int severity = 1;
  int occurrence = 1;
  int detection = 1;
  int rpn = 1;
  Tier tier = Tier::low;
  int adjusted_sample_size = 1;
  double priority = 0.0;
  bool critical = false;
  std::vector<IssueLink> links;
  Features features{};
  double model_probability = 0.5;
  double recommendation = 0.0;

  friend bool operator==(const RiskAssessment&, const RiskAssessment&) = default;
};

struct Sample {
  std::vector<double> features;
  bool failed = false;
};

struct RiskModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> loss_trace;

  static RiskModel untrained(std::size_t dimension = kFeatureCount);
  double logit(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
};

double sigmoid(double z) noexcept;

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

// Mean binary cross-entropy and its analytic gradient.
LossGradient loss_and_gradient(std::span<const double> weights, double bias, std::span<const Sample> samples);

// Full-batch gradient descent from w = 0, b = 0. loss_trace holds the loss
// before each epoch's update. throws InvalidArgument on an empty or ragged set.
RiskModel train_risk_model(std::span<const Sample> samples, const TrainConfig& config = {});

int compute_rpn(int severity, int occurrence, int detection);  // throws FactorOutOfRange
Tier tier_of(int rpn, const RiskConfig& config = {});
int adapt_sample_size(int base, Tier tier, const RiskConfig& config = {});
int occurrence_from_links(std::span<const IssueLink> links);

// Supplier x category failure-rate matrix with item-based collaborative
// filtering over category columns.
class FailureMatrix {
 public:
  FailureMatrix() = default;
  explicit FailureMatrix(std::span<const HistoricalIssue> history);

  bool has_data(const std::string& supplier, const std::string& category) const;
  double failure_rate(const std::string& supplier, const std::string& category) const;
  // Cosine of the two category columns over suppliers; 0 when either is empty.
  double category_similarity(const std::string& a, const std::string& b) const;
  double recommend(const std::string& category, const std::string& supplier, std::size_t neighbours = 5) const;
  double supplier_failure_rate(const std::string& supplier) const;

  const std::vector<std::string>& suppliers() const noexcept { return suppliers_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }

 private:
  struct Cell {
    int audits = 0;
    int failures = 0;
  };
  std::vector<std::string> suppliers_;
  std::vector<std::string> categories_;
  std::map<std::pair<std::string, std::string>, Cell> cells_;  // (supplier, category)
  std::map<std::string, Cell> per_supplier_;
};

double recommend_score(const ChecklistItem& item, const std::string& supplier,
                       std::span<const HistoricalIssue> history, std::size_t neighbours = 5);

// History embedded once for linking, plus derived statistics.
class HistoryIndex {
 public:
  HistoryIndex(std::vector<HistoricalIssue> history, std::shared_ptr<const llm::Embedder> embedder);

  const std::vector<HistoricalIssue>& issues() const noexcept { return issues_; }
  const HistoricalIssue& issue(const std::string& id) const;
  const text::VectorIndex& vectors() const noexcept { return vectors_; }
  const llm::Embedder& embedder() const noexcept { return *embedder_; }
  const FailureMatrix& matrix() const noexcept { return matrix_; }
  // Latest occurred_on in the history; the reference date for recency.
  Date as_of() const noexcept { return as_of_; }

 private:
  std::vector<HistoricalIssue> issues_;
  std::shared_ptr<const llm::Embedder> embedder_;
  text::VectorIndex vectors_;
  std::map<std::string, std::size_t> by_id_;
  FailureMatrix matrix_;
  Date as_of_;
};

// Issues whose description embedding has cosine >= threshold with the item
// text, best max_links first (ties by issue id).
std::vector<IssueLink> link_issues(const ChecklistItem& item, const HistoryIndex& history,
                                   double threshold = 0.35, std::size_t max_links = 10);

Features item_features(const ChecklistItem& item, const std::string& supplier, int rpn,
                       std::span<const IssueLink> links, const HistoryIndex& history, const RiskConfig& config);

// Training samples for labelled audit outcomes, using the same feature path
// as assessment.
std::vector<Sample> observation_samples(std::span<const AuditObservation> observations, const HistoryIndex& history,
                                        const RiskConfig& config);

// Per item: links -> occurrence -> rpn -> tier -> sample size -> priority.
// Output is ordered by (priority desc, rpn desc, item_id asc); the first
// top_n are flagged critical.
std::vector<RiskAssessment> assess_checklist(const Checklist& checklist, const HistoryIndex& history,
                                             const RiskModel& model, const RiskConfig& config);

}  // namespace smartaudit::risk
