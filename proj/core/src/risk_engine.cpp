// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/risk_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "smartaudit/errors.hpp"

namespace smartaudit::risk {

std::string_view to_string(Tier tier) noexcept {
  switch (tier) {
    case Tier::high: return "high";
    case Tier::medium: return "medium";
    case Tier::low: return "low";
  }
  return "low";
}

Tier parse_tier(std::string_view s) {
  if (s == "high") return Tier::high;
  if (s == "medium") return Tier::medium;
  if (s == "low") return Tier::low;
  throw InvalidArgument("unknown tier: " + std::string(s));
}

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

RiskModel RiskModel::untrained(std::size_t dimension) { return RiskModel{std::vector<double>(dimension, 0.0), 0.0, {}}; }

double RiskModel::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw InvalidArgument("feature dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(weights.size()));
  }
  double z = bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
  return z;
}

double RiskModel::predict(std::span<const double> x) const { return sigmoid(logit(x)); }

namespace {

// -[y log p + (1-y) log(1-p)] evaluated from the logit without cancellation.
double cross_entropy(double z, bool y) noexcept {
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return y ? softplus - z : softplus;
}

}  // namespace

LossGradient loss_and_gradient(std::span<const double> weights, double bias, std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidArgument("empty training set");
  LossGradient out;
  out.grad_weights.assign(weights.size(), 0.0);
  for (const auto& s : samples) {
    if (s.features.size() != weights.size()) throw InvalidArgument("ragged feature vectors in training set");
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * s.features[i];
    out.loss += cross_entropy(z, s.failed);
    const double residual = sigmoid(z) - (s.failed ? 1.0 : 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) out.grad_weights[i] += residual * s.features[i];
    out.grad_bias += residual;
  }
  const double n = static_cast<double>(samples.size());
  out.loss /= n;
  for (double& g : out.grad_weights) g /= n;
  out.grad_bias /= n;
  return out;
}

RiskModel train_risk_model(std::span<const Sample> samples, const TrainConfig& config) {
  if (samples.empty()) throw InvalidArgument("empty training set");
  const std::size_t dim = samples.front().features.size();
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw InvalidArgument("ragged feature vectors in training set");
    for (double x : s.features) {
      if (!std::isfinite(x)) throw InvalidArgument("non-finite feature in training set");
    }
  }
  RiskModel model = RiskModel::untrained(dim);
  model.loss_trace.reserve(static_cast<std::size_t>(std::max(0, config.epochs)));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto lg = loss_and_gradient(model.weights, model.bias, samples);
    model.loss_trace.push_back(lg.loss);
    for (std::size_t i = 0; i < dim; ++i) model.weights[i] -= config.learning_rate * lg.grad_weights[i];
    model.bias -= config.learning_rate * lg.grad_bias;
  }
  return model;
}

int compute_rpn(int severity, int occurrence, int detection) {
  const auto check = [](int v, const char* name) {
    if (v < 1 || v > 10) throw FactorOutOfRange(std::string(name) + " out of range [1,10]: " + std::to_string(v));
  };
  check(severity, "severity");
  check(occurrence, "occurrence");
  check(detection, "detection");
  return severity * occurrence * detection;
}

Tier tier_of(int rpn, const RiskConfig& config) {
  if (rpn >= config.tier_high) return Tier::high;
  if (rpn >= config.tier_medium) return Tier::medium;
  return Tier::low;
}

int adapt_sample_size(int base, Tier tier, const RiskConfig& config) {
  if (base < 1) throw InvalidArgument("base sample size must be >= 1");
  double m = config.multiplier_medium;
  if (tier == Tier::high) m = config.multiplier_high;
  if (tier == Tier::low) m = config.multiplier_low;
  // Guard against 2.0 * 7 = 14.000000000000002 style drift before ceil.
  const double scaled = m * static_cast<double>(base);
  const double rounded = std::round(scaled);
  const double value = std::abs(scaled - rounded) < 1e-9 ? rounded : std::ceil(scaled);
  return std::max(1, static_cast<int>(value));
}

int occurrence_from_links(std::span<const IssueLink> links) {
  if (links.empty()) return 1;
  double best = 0.0;
  for (const auto& l : links) best = std::max(best, l.similarity);
  return std::clamp(static_cast<int>(std::lround(10.0 * best)), 1, 10);
}

FailureMatrix::FailureMatrix(std::span<const HistoricalIssue> history) {
  std::set<std::string> suppliers, categories;
  for (const auto& issue : history) {
    suppliers.insert(issue.supplier_id);
    categories.insert(issue.item_category);
    auto& cell = cells_[{issue.supplier_id, issue.item_category}];
    ++cell.audits;
    auto& sup = per_supplier_[issue.supplier_id];
    ++sup.audits;
    if (issue.failed) {
      ++cell.failures;
      ++sup.failures;
    }
  }
  suppliers_.assign(suppliers.begin(), suppliers.end());
  categories_.assign(categories.begin(), categories.end());
}

bool FailureMatrix::has_data(const std::string& supplier, const std::string& category) const {
  return cells_.count({supplier, category}) != 0;
}

double FailureMatrix::failure_rate(const std::string& supplier, const std::string& category) const {
  auto it = cells_.find({supplier, category});
  if (it == cells_.end() || it->second.audits == 0) return 0.0;
  return static_cast<double>(it->second.failures) / static_cast<double>(it->second.audits);
}

double FailureMatrix::category_similarity(const std::string& a, const std::string& b) const {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& s : suppliers_) {
    const double x = failure_rate(s, a);
    const double y = failure_rate(s, b);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double FailureMatrix::recommend(const std::string& category, const std::string& supplier,
                                std::size_t neighbours) const {
  std::vector<std::pair<double, std::string>> candidates;
  for (const auto& c : categories_) {
    if (!has_data(supplier, c)) continue;
    candidates.emplace_back(category_similarity(category, c), c);
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  if (candidates.size() > neighbours) candidates.resize(neighbours);
  double num = 0.0, den = 0.0;
  for (const auto& [sim, c] : candidates) {
    num += sim * failure_rate(supplier, c);
    den += sim;
  }
  if (den <= 0.0) return 0.0;
  return std::clamp(num / den, 0.0, 1.0);
}

double FailureMatrix::supplier_failure_rate(const std::string& supplier) const {
  auto it = per_supplier_.find(supplier);
  if (it == per_supplier_.end() || it->second.audits == 0) return 0.0;
  return static_cast<double>(it->second.failures) / static_cast<double>(it->second.audits);
}

double recommend_score(const ChecklistItem& item, const std::string& supplier,
                       std::span<const HistoricalIssue> history, std::size_t neighbours) {
  return FailureMatrix(history).recommend(item.category, supplier, neighbours);
}

HistoryIndex::HistoryIndex(std::vector<HistoricalIssue> history, std::shared_ptr<const llm::Embedder> embedder)
    : issues_(std::move(history)),
      embedder_(std::move(embedder)),
      vectors_(embedder_ ? embedder_->dimension() : 1),
      matrix_(issues_) {
  if (!embedder_) throw InvalidArgument("history index needs an embedder");
  for (std::size_t i = 0; i < issues_.size(); ++i) {
    const auto& issue = issues_[i];
    if (!by_id_.emplace(issue.id, i).second) throw ValidationError({"duplicate issue id: " + issue.id});
    vectors_.add(issue.id, embedder_->embed(issue.description));
    if (i == 0 || issue.occurred_on > as_of_) as_of_ = issue.occurred_on;
  }
}

const HistoricalIssue& HistoryIndex::issue(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw NotFoundError("unknown issue: " + id);
  return issues_[it->second];
}

std::vector<IssueLink> link_issues(const ChecklistItem& item, const HistoryIndex& history, double threshold,
                                   std::size_t max_links) {
  if (history.issues().empty() || max_links == 0) return {};
  const auto query = history.embedder().embed(item.text);
  // Every candidate above threshold, then the best max_links of them.
  const auto ranked = history.vectors().search(query, history.vectors().size());
  std::vector<IssueLink> links;
  for (const auto& doc : ranked) {
    if (doc.score < threshold) break;
    links.push_back({item.id, doc.doc_id, std::min(1.0, doc.score)});
    if (links.size() == max_links) break;
  }
  return links;
}

Features item_features(const ChecklistItem& item, const std::string& supplier, int rpn,
                       std::span<const IssueLink> links, const HistoryIndex& history, const RiskConfig& config) {
  (void)item;
  Features f{};
  f[0] = static_cast<double>(rpn) / 1000.0;
  f[1] = history.matrix().supplier_failure_rate(supplier);
  std::size_t failed_links = 0;
  double recency = 0.0;
  const auto as_of = history.as_of().days_since_epoch();
  for (const auto& link : links) {
    const auto& issue = history.issue(link.issue_id);
    if (!issue.failed) continue;
    ++failed_links;
    const double age = static_cast<double>(std::max<std::int64_t>(0, as_of - issue.occurred_on.days_since_epoch()));
    recency = std::max(recency, std::exp(-age / config.recency_scale_days));
  }
  f[2] = recency;
  f[3] = config.max_links == 0 ? 0.0
                               : static_cast<double>(failed_links) / static_cast<double>(config.max_links);
  return f;
}

std::vector<Sample> observation_samples(std::span<const AuditObservation> observations, const HistoryIndex& history,
                                        const RiskConfig& config) {
  std::vector<Sample> samples;
  samples.reserve(observations.size());
  for (const auto& obs : observations) {
    const auto links = link_issues(obs.item, history, config.link_threshold, config.max_links);
    const int rpn = compute_rpn(obs.item.severity, occurrence_from_links(links), obs.item.detection);
    const auto f = item_features(obs.item, obs.supplier_id, rpn, links, history, config);
    samples.push_back({std::vector<double>(f.begin(), f.end()), obs.failed});
  }
  return samples;
}

std::vector<RiskAssessment> assess_checklist(const Checklist& checklist, const HistoryIndex& history,
                                             const RiskModel& model, const RiskConfig& config) {
  std::vector<RiskAssessment> out;
  out.reserve(checklist.items.size());
  for (const auto& item : checklist.items) {
    RiskAssessment a;
    a.item_id = item.id;
    a.links = link_issues(item, history, config.link_threshold, config.max_links);
    a.severity = item.severity;
    a.detection = item.detection;
    a.occurrence = occurrence_from_links(a.links);
    a.rpn = compute_rpn(a.severity, a.occurrence, a.detection);
    a.tier = tier_of(a.rpn, config);
    a.adjusted_sample_size = adapt_sample_size(item.base_sample_size, a.tier, config);
    a.features = item_features(item, checklist.supplier_id, a.rpn, a.links, history, config);
    a.model_probability = model.predict(a.features);
    a.recommendation = history.matrix().recommend(item.category, checklist.supplier_id, config.recommend_neighbours);
    a.priority = std::clamp((1.0 - config.blend_weight) * a.model_probability + config.blend_weight * a.recommendation,
                            0.0, 1.0);
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(), [](const RiskAssessment& x, const RiskAssessment& y) {
    if (x.priority != y.priority) return x.priority > y.priority;
    if (x.rpn != y.rpn) return x.rpn > y.rpn;
    return x.item_id < y.item_id;
  });
  for (std::size_t i = 0; i < out.size() && i < config.top_n; ++i) out[i].critical = true;
  return out;
}

}  // namespace smartaudit::risk
