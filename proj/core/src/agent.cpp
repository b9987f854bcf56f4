// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/agent.hpp"

#include "smartaudit/errors.hpp"

namespace smartaudit::agent {

using nlohmann::json;

std::string_view to_string(Intent intent) noexcept {
  switch (intent) {
    case Intent::commonality: return "commonality";
    case Intent::failure_analysis: return "failure_analysis";
    case Intent::report_generation: return "report_generation";
    case Intent::retrieval: return "retrieval";
  }
  return "retrieval";
}

std::optional<Intent> parse_intent(std::string_view s) noexcept {
  if (s == "commonality") return Intent::commonality;
  if (s == "failure_analysis") return Intent::failure_analysis;
  if (s == "report_generation") return Intent::report_generation;
  if (s == "retrieval") return Intent::retrieval;
  return std::nullopt;
}

Intent recognize_intent(std::string_view request, llm::Gateway& gateway) {
  try {
    const auto reply = gateway.call(llm::templates::intent_classify, {{"request", std::string(request)}});
    if (auto intent = parse_intent(reply.value.at("intent").get<std::string>())) return *intent;
  } catch (const GatewayError&) {
    // fall through to the keyword table
  }
  return parse_intent(llm::keyword_intent(request)).value_or(Intent::retrieval);
}

std::string_view to_string(StepKind kind) noexcept {
  switch (kind) {
    case StepKind::action: return "action";
    case StepKind::final: return "final";
    case StepKind::parse_error: return "parse_error";
  }
  return "action";
}

StepKind parse_step_kind(std::string_view s) {
  if (s == "action") return StepKind::action;
  if (s == "final") return StepKind::final;
  if (s == "parse_error") return StepKind::parse_error;
  throw InvalidArgument("unknown step kind: " + std::string(s));
}

std::string_view to_string(SessionStatus status) noexcept {
  switch (status) {
    case SessionStatus::running: return "running";
    case SessionStatus::done: return "done";
    case SessionStatus::failed: return "failed";
  }
  return "failed";
}

SessionStatus parse_session_status(std::string_view s) {
  if (s == "running") return SessionStatus::running;
  if (s == "done") return SessionStatus::done;
  if (s == "failed") return SessionStatus::failed;
  throw InvalidArgument("unknown session status: " + std::string(s));
}

void ToolRegistry::add(Tool tool) {
  if (tool.name.empty() || !tool.run) throw InvalidArgument("tool needs a name and a function");
  const std::string name = tool.name;
  if (!tools_.emplace(name, std::move(tool)).second) throw InvalidArgument("duplicate tool: " + name);
}

const Tool* ToolRegistry::find(std::string_view name) const noexcept {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, tool] : tools_) out.push_back(name);
  return out;
}

std::string ToolRegistry::describe() const {
  std::string out;
  for (const auto& [name, tool] : tools_) {
    out += "- " + name + ": " + tool.description + " Arguments: " + tool.argument_schema.dump() + "\n";
  }
  return out;
}

json prompt_transcript(const std::vector<AgentStep>& steps) {
  json out = json::array();
  for (const auto& s : steps) {
    json entry{{"thought", s.thought}, {"observation", s.observation}};
    if (s.kind == StepKind::action) {
      entry["action"] = s.action;
      entry["arguments"] = s.arguments;
    } else if (s.kind == StepKind::parse_error) {
      entry["action"] = nullptr;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

AgentSession run_session(std::string_view request, const ToolRegistry& registry, llm::Gateway& gateway,
                         const ToolContext& context, const SessionOptions& options) {
  if (registry.empty()) throw InvalidArgument("empty tool registry");
  AgentSession session;
  session.session_id = options.session_id;
  session.parent_session_id = options.parent_session_id;
  session.request = std::string(request);
  session.step_limit = options.step_limit;
  session.intent = recognize_intent(request, gateway);

  const std::string tools = registry.describe();
  json last_result = nullptr;
  int consecutive_parse_failures = 0;

  const auto append = [&](AgentStep step) {
    session.steps.push_back(std::move(step));
    if (options.on_step) options.on_step(session, session.steps.back());
  };

  for (int i = 1; i <= options.step_limit; ++i) {
    AgentStep step;
    step.index = i;
    json reply;
    try {
      reply = gateway
                  .call(llm::templates::agent_step, {{"request", session.request},
                                                     {"intent", std::string(to_string(session.intent))},
                                                     {"step", std::to_string(i)},
                                                     {"step_limit", std::to_string(options.step_limit)},
                                                     {"tools", tools},
                                                     {"transcript", prompt_transcript(session.steps).dump()}})
                  .value;
      if (!reply.contains("final") && !reply.contains("action")) {
        throw GatewayError(GatewayError::Kind::schema_violation, "agent_step: reply has neither action nor final");
      }
    } catch (const GatewayError& e) {
      if (e.kind() != GatewayError::Kind::parse_failure && e.kind() != GatewayError::Kind::schema_violation) {
        session.status = SessionStatus::failed;
        session.diagnostic = std::string("gateway failure: ") + e.what();
        return session;
      }
      step.kind = StepKind::parse_error;
      step.observation = std::string("error: ") + e.what();
      append(std::move(step));
      if (++consecutive_parse_failures == 2) {
        session.status = SessionStatus::failed;
        session.diagnostic = "two consecutive parse failures";
        return session;
      }
      continue;
    }
    consecutive_parse_failures = 0;
    step.thought = reply.value("thought", std::string());

    if (reply.contains("final")) {
      step.kind = StepKind::final;
      append(step);
      session.final = AgentFinal{reply["final"].get<std::string>(), last_result};
      session.status = SessionStatus::done;
      return session;
    }

    step.kind = StepKind::action;
    step.action = reply["action"].get<std::string>();
    if (auto it = reply.find("arguments"); it != reply.end() && it->is_object()) step.arguments = *it;
    if (const Tool* tool = registry.find(step.action)) {
      try {
        auto result = tool->run(step.arguments, context);
        step.observation = result.dump();
        last_result = std::move(result);
      } catch (const std::exception& e) {
        step.observation = std::string("error: ") + e.what();
      }
    } else {
      step.observation = "error: unknown tool '" + step.action + "'";
    }
    append(std::move(step));
  }
  session.status = SessionStatus::failed;
  session.diagnostic = "step limit reached";
  return session;
}

}  // namespace smartaudit::agent
