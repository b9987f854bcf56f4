// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartaudit/copilot.hpp"
#include "smartaudit/domain.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/llm_gateway.hpp"

namespace smartaudit::agent {

enum class Intent { commonality, failure_analysis, report_generation, retrieval };

std::string_view to_string(Intent intent) noexcept;
std::optional<Intent> parse_intent(std::string_view s) noexcept;

// intent_classify through the gateway; the keyword table whenever the
// gateway fails or answers with something that is not an intent.
Intent recognize_intent(std::string_view request, llm::Gateway& gateway);

enum class StepKind { action, final, parse_error };
std::string_view to_string(StepKind kind) noexcept;
StepKind parse_step_kind(std::string_view s);

struct AgentStep {
  int index = 0;  // 1-based
  StepKind kind = StepKind::action;
  std::string thought;
  std::string action;  // tool name for action steps
  nlohmann::json arguments = nlohmann::json::object();
  // Tool result as compact JSON, or "error: ..." text.
  std::string observation;

  friend bool operator==(const AgentStep&, const AgentStep&) = default;
};

enum class SessionStatus { running, done, failed };
std::string_view to_string(SessionStatus status) noexcept;
SessionStatus parse_session_status(std::string_view s);

struct AgentFinal {
  std::string report;
  // Last successful tool result, null when no tool ran.
  nlohmann::json payload;

  friend bool operator==(const AgentFinal&, const AgentFinal&) = default;
};

struct AgentSession {
  std::string session_id;
  std::optional<std::string> parent_session_id;
  std::string request;
  Intent intent = Intent::retrieval;
  std::vector<AgentStep> steps;
  std::optional<AgentFinal> final;
  SessionStatus status = SessionStatus::running;
  std::string diagnostic;
  int step_limit = 8;

  friend bool operator==(const AgentSession&, const AgentSession&) = default;
};

// Read-only view the tools work against, fixed when the session starts.
struct ToolContext {
  std::shared_ptr<const copilot::KnowledgeState> kb;
  std::shared_ptr<const std::vector<HistoricalIssue>> history;
  llm::Gateway* gateway = nullptr;
  const llm::Embedder* embedder = nullptr;
  text::HybridParams hybrid;
};

struct Tool {
  std::string name;
  std::string description;
  nlohmann::json argument_schema;
  nlohmann::json result_schema;
  // throws InvalidArgument on malformed arguments
  std::function<nlohmann::json(const nlohmann::json& arguments, const ToolContext& context)> run;
};

class ToolRegistry {
 public:
  // search_knowledge, commonality_stats, five_whys, eight_d_report, trend_series
  static ToolRegistry defaults();

  void add(Tool tool);  // throws InvalidArgument on duplicate name
  const Tool* find(std::string_view name) const noexcept;
  std::vector<std::string> names() const;
  bool empty() const noexcept { return tools_.empty(); }
  // One line per tool, used in the agent_step prompt.
  std::string describe() const;

 private:
  std::map<std::string, Tool, std::less<>> tools_;
};

struct SessionOptions {
  std::string session_id;
  std::optional<std::string> parent_session_id;
  int step_limit = 8;
  // Called after each step is appended, from the session's thread.
  std::function<void(const AgentSession&, const AgentStep&)> on_step;
};

AgentSession run_session(std::string_view request, const ToolRegistry& registry, llm::Gateway& gateway,
                         const ToolContext& context, const SessionOptions& options = {});

// The transcript as the agent_step prompt sees it.
nlohmann::json prompt_transcript(const std::vector<AgentStep>& steps);

// ---- tools as plain functions ----

enum class GroupBy { tag, supplier, category };
std::string_view to_string(GroupBy g) noexcept;
GroupBy parse_group_by(std::string_view s);  // throws InvalidArgument("unknown group_by: ...")

struct CommonalityRow {
  std::string key;
  std::size_t count = 0;
  double share = 0.0;
  double cumulative_share = 0.0;

  friend bool operator==(const CommonalityRow&, const CommonalityRow&) = default;
};

struct CommonalityTable {
  GroupBy group_by = GroupBy::tag;
  std::size_t records = 0;  // filtered record count
  std::size_t total = 0;    // sum of counts
  std::vector<CommonalityRow> rows;

  friend bool operator==(const CommonalityTable&, const CommonalityTable&) = default;
};

// A record's category is its first tag; records without tags fall under
// "uncategorized" (and "untagged" when grouping by tag).
CommonalityTable commonality_stats(const copilot::KnowledgeState& kb, GroupBy group_by,
                                   const copilot::SearchFilters& filters = {});

struct TrendBucket {
  std::string month;  // YYYY-MM
  std::size_t count = 0;

  friend bool operator==(const TrendBucket&, const TrendBucket&) = default;
};

struct TrendSeries {
  std::string bucket = "month";
  std::vector<TrendBucket> series;

  friend bool operator==(const TrendSeries&, const TrendSeries&) = default;
};

TrendSeries trend_series(const copilot::KnowledgeState& kb, const copilot::SearchFilters& filters = {});

struct WhyPair {
  std::string why;
  std::string because;

  friend bool operator==(const WhyPair&, const WhyPair&) = default;
};

struct FiveWhys {
  std::string subject_id;
  std::vector<WhyPair> chain;

  friend bool operator==(const FiveWhys&, const FiveWhys&) = default;
};

// Accepts a knowledge record id or a historical issue id.
// throws NotFoundError for unknown ids.
FiveWhys five_whys(const std::string& id, const ToolContext& context, int depth = 5);

struct EightDSection {
  std::string id;  // D0..D8
  std::string title;
  std::string content;

  friend bool operator==(const EightDSection&, const EightDSection&) = default;
};

struct EightDReport {
  std::vector<std::string> record_ids;
  std::vector<EightDSection> sections;
  FiveWhys root_cause_chain;
  std::string markdown;

  friend bool operator==(const EightDReport&, const EightDReport&) = default;
};

// throws InvalidArgument on an empty id list, NotFoundError on unknown ids.
EightDReport eight_d_report(const std::vector<std::string>& record_ids, const ToolContext& context);

copilot::SearchFilters filters_from_json(const nlohmann::json& j);  // throws InvalidArgument
nlohmann::json to_json(const copilot::SearchFilters& filters);

}  // namespace smartaudit::agent
