// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON mappings for every persisted or transmitted type. Field names follow
// the domain types. Object keys serialize sorted, so dump() output is stable.

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

#include "smartaudit/agent.hpp"
#include "smartaudit/copilot.hpp"
#include "smartaudit/domain.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/risk_engine.hpp"

namespace smartaudit {

using nlohmann::json;

void to_json(json& j, const Date& d);
void from_json(const json& j, Date& d);

void to_json(json& j, const ChecklistItem& v);
void from_json(const json& j, ChecklistItem& v);
void to_json(json& j, const Checklist& v);
void from_json(const json& j, Checklist& v);
void to_json(json& j, const HistoricalIssue& v);
void from_json(const json& j, HistoricalIssue& v);
void to_json(json& j, const AuditObservation& v);
void from_json(const json& j, AuditObservation& v);
void to_json(json& j, const Taxonomy& v);
void from_json(const json& j, Taxonomy& v);
void to_json(json& j, const QualityScore& v);
void from_json(const json& j, QualityScore& v);
void to_json(json& j, const KnowledgeRecord& v);
void from_json(const json& j, KnowledgeRecord& v);

// Converts with nlohmann and rethrows its type/key errors as
// InvalidArgument naming the context.
template <typename T>
T decode(const json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string(what) + ": " + e.what());
  }
}

json parse_json_text(std::string_view text, std::string_view what);  // throws InvalidArgument

}  // namespace smartaudit

namespace smartaudit::risk {
void to_json(nlohmann::json& j, const IssueLink& v);
void to_json(nlohmann::json& j, const RiskAssessment& v);
void to_json(nlohmann::json& j, const RiskModel& v);
void from_json(const nlohmann::json& j, RiskModel& v);
}  // namespace smartaudit::risk

namespace smartaudit::copilot {
void to_json(nlohmann::json& j, const RawFinding& v);
void from_json(const nlohmann::json& j, RawFinding& v);
void to_json(nlohmann::json& j, const SearchHit& v);
void to_json(nlohmann::json& j, const Scorecard& v);
void to_json(nlohmann::json& j, const MonthlyQuality& v);
void to_json(nlohmann::json& j, const CodSummary& v);
}  // namespace smartaudit::copilot

namespace smartaudit::agent {
void to_json(nlohmann::json& j, const AgentStep& v);
void from_json(const nlohmann::json& j, AgentStep& v);
void to_json(nlohmann::json& j, const AgentFinal& v);
void from_json(const nlohmann::json& j, AgentFinal& v);
void to_json(nlohmann::json& j, const AgentSession& v);
void from_json(const nlohmann::json& j, AgentSession& v);
void to_json(nlohmann::json& j, const CommonalityTable& v);
void to_json(nlohmann::json& j, const TrendSeries& v);
void to_json(nlohmann::json& j, const FiveWhys& v);
void to_json(nlohmann::json& j, const EightDReport& v);
}  // namespace smartaudit::agent
