// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/json_io.hpp"

#include "smartaudit/errors.hpp"

namespace smartaudit {

namespace {

const json& need(const json& j, const char* key) {
  if (!j.is_object()) throw InvalidArgument(std::string("expected an object with field ") + key);
  auto it = j.find(key);
  if (it == j.end()) throw InvalidArgument(std::string("missing field: ") + key);
  return *it;
}

std::string need_string(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_string()) throw InvalidArgument(std::string("field ") + key + " must be a string");
  return v.get<std::string>();
}

int int_value(const json& v, const char* key) {
  if (!v.is_number_integer()) throw InvalidArgument(std::string("field ") + key + " must be an integer");
  const auto x = v.get<long long>();
  // Out-of-int values are still range errors, not type errors.
  if (x > 1'000'000'000LL) return 1'000'000'000;
  if (x < -1'000'000'000LL) return -1'000'000'000;
  return static_cast<int>(x);
}

int need_int(const json& j, const char* key) { return int_value(need(j, key), key); }

int opt_int(const json& j, const char* key, int fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return int_value(*it, key);
}

std::string opt_string(const json& j, const char* key, std::string fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw InvalidArgument(std::string("field ") + key + " must be a string");
  return it->get<std::string>();
}

std::optional<std::string> nullable_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvalidArgument(std::string("field ") + key + " must be a string or null");
  return it->get<std::string>();
}

std::vector<std::string> opt_strings(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_array()) throw InvalidArgument(std::string("field ") + key + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw InvalidArgument(std::string("field ") + key + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool need_bool(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_boolean()) throw InvalidArgument(std::string("field ") + key + " must be a boolean");
  return v.get<bool>();
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string(what) + ": " + e.what());
  }
}

void to_json(json& j, const Date& d) { j = d.to_string(); }

void from_json(const json& j, Date& d) {
  if (!j.is_string()) throw InvalidArgument("date must be a YYYY-MM-DD string");
  d = Date::parse(j.get<std::string>());
}

void to_json(json& j, const ChecklistItem& v) {
  j = json{{"id", v.id},
           {"text", v.text},
           {"category", v.category},
           {"severity", v.severity},
           {"detection", v.detection},
           {"base_sample_size", v.base_sample_size}};
}

void from_json(const json& j, ChecklistItem& v) {
  v.id = need_string(j, "id");
  v.text = need_string(j, "text");
  v.category = opt_string(j, "category");
  v.severity = opt_int(j, "severity", 5);
  v.detection = opt_int(j, "detection", 5);
  v.base_sample_size = need_int(j, "base_sample_size");
}

void to_json(json& j, const Checklist& v) {
  j = json{{"id", v.id}, {"supplier_id", v.supplier_id}, {"items", v.items}};
}

void from_json(const json& j, Checklist& v) {
  v.id = opt_string(j, "id");
  v.supplier_id = opt_string(j, "supplier_id");
  const auto& items = need(j, "items");
  if (!items.is_array()) throw InvalidArgument("field items must be an array");
  v.items.clear();
  for (const auto& item : items) v.items.push_back(item.get<ChecklistItem>());
}

void to_json(json& j, const HistoricalIssue& v) {
  j = json{{"id", v.id},
           {"supplier_id", v.supplier_id},
           {"item_category", v.item_category},
           {"description", v.description},
           {"failure_pattern", v.failure_pattern},
           {"tags", v.tags},
           {"severity", v.severity},
           {"occurred_on", v.occurred_on},
           {"failed", v.failed}};
}

void from_json(const json& j, HistoricalIssue& v) {
  v.id = need_string(j, "id");
  v.supplier_id = need_string(j, "supplier_id");
  v.item_category = opt_string(j, "item_category");
  v.description = need_string(j, "description");
  v.failure_pattern = opt_string(j, "failure_pattern");
  v.tags = opt_strings(j, "tags");
  v.severity = opt_int(j, "severity", 5);
  v.occurred_on = need(j, "occurred_on").get<Date>();
  v.failed = need_bool(j, "failed");
}

void to_json(json& j, const AuditObservation& v) {
  j = json{{"supplier_id", v.supplier_id}, {"item", v.item}, {"audited_on", v.audited_on}, {"failed", v.failed}};
}

void from_json(const json& j, AuditObservation& v) {
  v.supplier_id = need_string(j, "supplier_id");
  v.item = need(j, "item").get<ChecklistItem>();
  v.audited_on = need(j, "audited_on").get<Date>();
  v.failed = need_bool(j, "failed");
}

void to_json(json& j, const Taxonomy& v) {
  j = json{{"categories", v.categories()}, {"failure_patterns", v.failure_patterns()}};
}

void from_json(const json& j, Taxonomy& v) {
  v = Taxonomy(opt_strings(j, "categories"), opt_strings(j, "failure_patterns"));
}

void to_json(json& j, const QualityScore& v) {
  j = json{{"root_cause_depth", v.root_cause_depth},
           {"causal_chain_validity", v.causal_chain_validity},
           {"corrective_action_specificity", v.corrective_action_specificity},
           {"evidence_support", v.evidence_support},
           {"overall", v.overall}};
}

void from_json(const json& j, QualityScore& v) {
  v.root_cause_depth = need_int(j, "root_cause_depth");
  v.causal_chain_validity = need_int(j, "causal_chain_validity");
  v.corrective_action_specificity = need_int(j, "corrective_action_specificity");
  v.evidence_support = need_int(j, "evidence_support");
  v.overall = opt_int(j, "overall", 5 * v.dimension_sum());
}

void to_json(json& j, const KnowledgeRecord& v) {
  j = json{{"id", v.id},
           {"source_issue_id", nullable(v.source_issue_id)},
           {"supplier_id", v.supplier_id},
           {"tuned_description", v.tuned_description},
           {"failure_pattern", v.failure_pattern},
           {"tags", v.tags},
           {"root_cause", v.root_cause},
           {"corrective_action", v.corrective_action},
           {"quality", v.quality ? json(*v.quality) : json(nullptr)},
           {"content_hash", v.content_hash},
           {"created_at", format_timestamp(v.created_at)},
           {"near_duplicate_of", nullable(v.near_duplicate_of)},
           {"summary_rounds", v.summary_rounds}};
}

void from_json(const json& j, KnowledgeRecord& v) {
  v.id = opt_string(j, "id");
  v.source_issue_id = nullable_string(j, "source_issue_id");
  v.supplier_id = opt_string(j, "supplier_id");
  v.tuned_description = need_string(j, "tuned_description");
  v.failure_pattern = opt_string(j, "failure_pattern");
  v.tags = opt_strings(j, "tags");
  v.root_cause = opt_string(j, "root_cause");
  v.corrective_action = opt_string(j, "corrective_action");
  if (auto it = j.find("quality"); it != j.end() && !it->is_null()) {
    v.quality = it->get<QualityScore>();
  } else {
    v.quality.reset();
  }
  v.content_hash = opt_string(j, "content_hash");
  const auto created = opt_string(j, "created_at");
  v.created_at = created.empty() ? Timestamp{} : parse_timestamp(created);
  v.near_duplicate_of = nullable_string(j, "near_duplicate_of");
  v.summary_rounds = opt_strings(j, "summary_rounds");
}

}  // namespace smartaudit

namespace smartaudit::risk {

void to_json(nlohmann::json& j, const IssueLink& v) {
  j = json{{"item_id", v.item_id}, {"issue_id", v.issue_id}, {"similarity", v.similarity}};
}

void to_json(nlohmann::json& j, const RiskAssessment& v) {
  j = json{{"item_id", v.item_id},
           {"severity", v.severity},
           {"occurrence", v.occurrence},
           {"detection", v.detection},
           {"rpn", v.rpn},
           {"tier", to_string(v.tier)},
           {"adjusted_sample_size", v.adjusted_sample_size},
           {"priority", v.priority},
           {"critical", v.critical},
           {"links", v.links},
           {"features", v.features},
           {"model_probability", v.model_probability},
           {"recommendation", v.recommendation}};
}

void to_json(nlohmann::json& j, const RiskModel& v) {
  j = json{{"weights", v.weights}, {"bias", v.bias}, {"epochs", v.loss_trace.size()},
           {"final_loss", v.loss_trace.empty() ? json(nullptr) : json(v.loss_trace.back())}};
}

void from_json(const nlohmann::json& j, RiskModel& v) {
  v.weights = need(j, "weights").get<std::vector<double>>();
  v.bias = need(j, "bias").get<double>();
  v.loss_trace.clear();
}

}  // namespace smartaudit::risk

namespace smartaudit::copilot {

void to_json(nlohmann::json& j, const RawFinding& v) {
  j = json{{"supplier_id", v.supplier_id},
           {"item_id", nullable(v.item_id)},
           {"free_text", v.free_text},
           {"attachments", v.attachments},
           {"submitted_at", format_timestamp(v.submitted_at)},
           {"root_cause", nullable(v.root_cause)},
           {"corrective_action", nullable(v.corrective_action)},
           {"source_issue_id", nullable(v.source_issue_id)}};
}

void from_json(const nlohmann::json& j, RawFinding& v) {
  v.supplier_id = need_string(j, "supplier_id");
  v.item_id = nullable_string(j, "item_id");
  v.free_text = need_string(j, "free_text");
  v.attachments = opt_strings(j, "attachments");
  const auto submitted = opt_string(j, "submitted_at");
  if (submitted.empty()) {
    v.submitted_at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  } else {
    v.submitted_at = parse_timestamp(submitted);
  }
  v.root_cause = nullable_string(j, "root_cause");
  v.corrective_action = nullable_string(j, "corrective_action");
  v.source_issue_id = nullable_string(j, "source_issue_id");
}

void to_json(nlohmann::json& j, const SearchHit& v) {
  j = json{{"record_id", v.record_id},
           {"rank", v.rank},
           {"score", v.score},
           {"scores", {{"bm25", v.bm25}, {"semantic", v.semantic}}},
           {"record", v.record}};
}

void to_json(nlohmann::json& j, const MonthlyQuality& v) {
  j = json{{"month", v.month}, {"count", v.count}, {"mean_overall", v.mean_overall}};
}

void to_json(nlohmann::json& j, const Scorecard& v) {
  j = json{{"supplier_id", v.supplier_id},
           {"record_count", v.record_count},
           {"count", v.count},
           {"mean_overall", v.mean_overall},
           {"dimension_means",
            {{"root_cause_depth", v.mean_root_cause_depth},
             {"causal_chain_validity", v.mean_causal_chain_validity},
             {"corrective_action_specificity", v.mean_corrective_action_specificity},
             {"evidence_support", v.mean_evidence_support}}},
           {"trend", v.trend}};
}

void to_json(nlohmann::json& j, const CodSummary& v) {
  j = json{{"record_id", v.record_id}, {"rounds", v.rounds}, {"final_embedding", v.final_embedding}};
}

}  // namespace smartaudit::copilot

namespace smartaudit::agent {

void to_json(nlohmann::json& j, const AgentStep& v) {
  j = json{{"index", v.index},
           {"kind", to_string(v.kind)},
           {"thought", v.thought},
           {"action", v.action},
           {"arguments", v.arguments},
           {"observation", v.observation}};
}

void from_json(const nlohmann::json& j, AgentStep& v) {
  v.index = need_int(j, "index");
  v.kind = parse_step_kind(need_string(j, "kind"));
  v.thought = opt_string(j, "thought");
  v.action = opt_string(j, "action");
  auto it = j.find("arguments");
  v.arguments = it == j.end() || it->is_null() ? json::object() : *it;
  v.observation = opt_string(j, "observation");
}

void to_json(nlohmann::json& j, const AgentFinal& v) { j = json{{"report", v.report}, {"payload", v.payload}}; }

void from_json(const nlohmann::json& j, AgentFinal& v) {
  v.report = need_string(j, "report");
  auto it = j.find("payload");
  v.payload = it == j.end() ? json(nullptr) : *it;
}

void to_json(nlohmann::json& j, const AgentSession& v) {
  j = json{{"session_id", v.session_id},
           {"parent_session_id", nullable(v.parent_session_id)},
           {"request", v.request},
           {"intent", to_string(v.intent)},
           {"steps", v.steps},
           {"final", v.final ? json(*v.final) : json(nullptr)},
           {"status", to_string(v.status)},
           {"diagnostic", v.diagnostic},
           {"step_limit", v.step_limit}};
}

void from_json(const nlohmann::json& j, AgentSession& v) {
  v.session_id = need_string(j, "session_id");
  v.parent_session_id = nullable_string(j, "parent_session_id");
  v.request = need_string(j, "request");
  const auto intent = parse_intent(need_string(j, "intent"));
  if (!intent) throw InvalidArgument("unknown intent");
  v.intent = *intent;
  v.steps.clear();
  if (auto it = j.find("steps"); it != j.end()) {
    for (const auto& s : *it) v.steps.push_back(s.get<AgentStep>());
  }
  if (auto it = j.find("final"); it != j.end() && !it->is_null()) {
    v.final = it->get<AgentFinal>();
  } else {
    v.final.reset();
  }
  v.status = parse_session_status(need_string(j, "status"));
  v.diagnostic = opt_string(j, "diagnostic");
  v.step_limit = opt_int(j, "step_limit", 8);
}

void to_json(nlohmann::json& j, const CommonalityTable& v) {
  json rows = json::array();
  for (const auto& r : v.rows) {
    rows.push_back({{"key", r.key}, {"count", r.count}, {"share", r.share}, {"cumulative_share", r.cumulative_share}});
  }
  j = json{{"group_by", to_string(v.group_by)}, {"records", v.records}, {"total", v.total}, {"rows", rows}};
}

void to_json(nlohmann::json& j, const TrendSeries& v) {
  json series = json::array();
  for (const auto& b : v.series) series.push_back({{"month", b.month}, {"count", b.count}});
  j = json{{"bucket", v.bucket}, {"series", series}};
}

void to_json(nlohmann::json& j, const FiveWhys& v) {
  json chain = json::array();
  for (const auto& p : v.chain) chain.push_back({{"why", p.why}, {"because", p.because}});
  j = json{{"record_id", v.subject_id}, {"chain", chain}};
}

void to_json(nlohmann::json& j, const EightDReport& v) {
  json sections = json::array();
  for (const auto& s : v.sections) sections.push_back({{"id", s.id}, {"title", s.title}, {"content", s.content}});
  j = json{{"record_ids", v.record_ids},
           {"sections", sections},
           {"root_cause_chain", v.root_cause_chain},
           {"markdown", v.markdown}};
}

}  // namespace smartaudit::agent
