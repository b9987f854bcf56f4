// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/llm_gateway.hpp"

#include <httplib.h>

#include <fstream>
#include <set>
#include <sstream>

#include "http_util.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/hashing.hpp"

namespace smartaudit::llm {

using nlohmann::json;

std::string OutputContract::describe() const {
  std::string out = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& f = fields[i];
    if (i) out += ", ";
    out += "\"" + f.name + "\": ";
    switch (f.kind) {
      case FieldSpec::Kind::string: out += "string"; break;
      case FieldSpec::Kind::integer:
        out += "integer";
        if (f.min && f.max) out += " " + std::to_string(*f.min) + ".." + std::to_string(*f.max);
        break;
      case FieldSpec::Kind::string_array: out += "[string]"; break;
      case FieldSpec::Kind::object: out += "object"; break;
      case FieldSpec::Kind::object_array: {
        out += "[{";
        for (std::size_t k = 0; k < f.item_keys.size(); ++k) {
          if (k) out += ", ";
          out += "\"" + f.item_keys[k] + "\": string";
        }
        out += "}]";
        break;
      }
    }
    if (!f.required) out += " (optional)";
  }
  return out + "}";
}

PromptTemplate::PromptTemplate(std::string template_id, std::string body, OutputContract contract)
    : template_id_(std::move(template_id)), body_(std::move(body)), contract_(std::move(contract)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while ((pos = body_.find("{{", pos)) != std::string::npos) {
    const auto end = body_.find("}}", pos + 2);
    if (end == std::string::npos) break;
    auto name = body_.substr(pos + 2, end - pos - 2);
    if (seen.insert(name).second) out.push_back(std::move(name));
    pos = end + 2;
  }
  return out;
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::string out;
  out.reserve(body_.size() + 256);
  std::size_t pos = 0;
  while (true) {
    const auto open = body_.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = body_.find("}}", open + 2);
    if (close == std::string::npos) break;
    out.append(body_, pos, open - pos);
    const auto name = body_.substr(open + 2, close - open - 2);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw InvalidArgument("template " + template_id_ + ": unbound placeholder {{" + name + "}}");
    }
    out += it->second;
    pos = close + 2;
  }
  out.append(body_, pos, std::string::npos);
  return out;
}

namespace {

FieldSpec str(std::string name, bool required = true) {
  return {std::move(name), FieldSpec::Kind::string, required, {}, {}, {}};
}
FieldSpec score(std::string name) { return {std::move(name), FieldSpec::Kind::integer, true, 0, 5, {}}; }

}  // namespace

TemplateRegistry TemplateRegistry::defaults() {
  TemplateRegistry r;
  r.add({"tune_description",
         "You are a manufacturing quality engineer. Rewrite the audit note below as one clear, factual issue "
         "description. Keep part numbers, stations and quantities.\n\nAudit note:\n{{text}}\n\n"
         "Reply with a JSON object {\"description\": string}.",
         {{str("description")}}});
  r.add({"extract_pattern",
         "Identify the failure pattern in the issue description. Prefer one of the known patterns: "
         "{{patterns}}.\n\nDescription:\n{{text}}\n\nReply with a JSON object {\"failure_pattern\": string}.",
         {{str("failure_pattern")}}});
  r.add({"assign_tags",
         "Tag the issue with every applicable category from this list and no others: {{categories}}.\n\n"
         "Issue:\n{{text}}\n\nReply with a JSON object {\"tags\": [string]}.",
         {{{"tags", FieldSpec::Kind::string_array, true, {}, {}, {}}}}});
  r.add({"cod_summarize",
         "Chain-of-density round {{round}}. Write a summary of at most {{max_tokens}} words that keeps every "
         "entity of the previous summary and adds the most important missing ones.\n\nDocument:\n{{description}}"
         "\n\nPrevious summary:\n{{previous}}\n\nReply with a JSON object {\"summary\": string}.",
         {{str("summary")}}});
  r.add({"quality_judge",
         "Score the root cause analysis and corrective action on four 0-5 integer dimensions: "
         "root_cause_depth, causal_chain_validity, corrective_action_specificity, evidence_support.\n\n"
         "Issue: {{description}}\nRoot cause: {{root_cause}}\nCorrective action: {{corrective_action}}\n\n"
         "Reply with a JSON object holding the four integers.",
         {{score("root_cause_depth"), score("causal_chain_validity"), score("corrective_action_specificity"),
           score("evidence_support")}}});
  r.add({"intent_classify",
         "Classify the engineer's request as one of: commonality, failure_analysis, report_generation, "
         "retrieval.\n\nRequest: {{request}}\n\nReply with a JSON object {\"intent\": string}.",
         {{str("intent")}}});
  r.add({"agent_step",
         "You are a supplier-quality commonality analysis agent. Work step by step: think, then either call one "
         "tool or give the final answer.\n\nRequest: {{request}}\nIntent: {{intent}}\nStep: {{step}} of "
         "{{step_limit}}\n\nTools:\n{{tools}}\n\nTranscript so far (JSON):\n{{transcript}}\n\n"
         "Reply with a JSON object {\"thought\": string, \"action\": tool name, \"arguments\": object} or "
         "{\"thought\": string, \"final\": report text}.",
         {{str("thought"), str("action", false), {"arguments", FieldSpec::Kind::object, false, {}, {}, {}},
           str("final", false)}}});
  r.add({"five_whys",
         "Apply the 5 Whys method to the failure below. Produce exactly {{depth}} why/because pairs, each "
         "answer becoming the next question.\n\nFailure pattern: {{failure_pattern}}\nDescription: "
         "{{description}}\nKnown root cause: {{root_cause}}\n\n"
         "Reply with a JSON object {\"chain\": [{\"why\": string, \"because\": string}]}.",
         {{{"chain", FieldSpec::Kind::object_array, true, {}, {}, {"why", "because"}}}}});
  r.add({"eight_d_section",
         "Write section {{section}} ({{title}}) of an 8D corrective action report.\n\nProblem statements:\n"
         "{{problem}}\n\nRoot cause analysis:\n{{root_cause}}\n\nCorrective actions:\n{{corrective_action}}\n\n"
         "Reply with a JSON object {\"content\": string}.",
         {{str("content")}}});
  return r;
}

void TemplateRegistry::add(PromptTemplate tmpl) {
  const std::string id = tmpl.template_id();
  if (!templates_.emplace(id, std::move(tmpl)).second) throw InvalidArgument("duplicate template id: " + id);
}

const PromptTemplate& TemplateRegistry::get(std::string_view template_id) const {
  auto it = templates_.find(template_id);
  if (it == templates_.end()) {
    throw GatewayError(GatewayError::Kind::unknown_template, "unknown template: " + std::string(template_id));
  }
  return it->second;
}

bool TemplateRegistry::contains(std::string_view template_id) const {
  return templates_.find(template_id) != templates_.end();
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, t] : templates_) out.push_back(id);
  return out;
}

namespace {

// End of the balanced {...} starting at open, honouring JSON strings, or npos.
std::size_t match_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

[[noreturn]] void violation(const std::string& field, std::size_t offset, const std::string& what) {
  throw GatewayError(GatewayError::Kind::schema_violation,
                     "field '" + field + "' " + what + " (block at offset " + std::to_string(offset) + ")");
}

void validate(const json& obj, const OutputContract& contract, std::size_t offset) {
  for (const auto& f : contract.fields) {
    auto it = obj.find(f.name);
    if (it == obj.end() || it->is_null()) {
      if (f.required) violation(f.name, offset, "missing");
      continue;
    }
    switch (f.kind) {
      case FieldSpec::Kind::string:
        if (!it->is_string()) violation(f.name, offset, "must be a string");
        break;
      case FieldSpec::Kind::integer: {
        if (!it->is_number_integer()) violation(f.name, offset, "must be an integer");
        const auto v = it->get<long long>();
        if ((f.min && v < *f.min) || (f.max && v > *f.max)) {
          violation(f.name, offset,
                    "out of range: " + std::to_string(v) + " not in " + std::to_string(f.min.value_or(v)) + ".." +
                        std::to_string(f.max.value_or(v)));
        }
        break;
      }
      case FieldSpec::Kind::string_array:
        if (!it->is_array()) violation(f.name, offset, "must be an array of strings");
        for (const auto& e : *it) {
          if (!e.is_string()) violation(f.name, offset, "must be an array of strings");
        }
        break;
      case FieldSpec::Kind::object:
        if (!it->is_object()) violation(f.name, offset, "must be an object");
        break;
      case FieldSpec::Kind::object_array:
        if (!it->is_array()) violation(f.name, offset, "must be an array of objects");
        for (std::size_t i = 0; i < it->size(); ++i) {
          const auto& e = (*it)[i];
          if (!e.is_object()) violation(f.name, offset, "element " + std::to_string(i) + " must be an object");
          for (const auto& key : f.item_keys) {
            auto k = e.find(key);
            if (k == e.end() || !k->is_string()) {
              violation(f.name, offset, "element " + std::to_string(i) + " needs string '" + key + "'");
            }
          }
        }
        break;
    }
  }
}

}  // namespace

json parse_structured(std::string_view raw_text, const OutputContract& contract) {
  for (std::size_t open = raw_text.find('{'); open != std::string_view::npos; open = raw_text.find('{', open + 1)) {
    const auto close = match_brace(raw_text, open);
    if (close == std::string_view::npos) continue;
    json parsed = json::parse(raw_text.substr(open, close - open + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) continue;
    validate(parsed, contract, open);
    return parsed;
  }
  throw GatewayError(GatewayError::Kind::parse_failure,
                     "no JSON object found in model output (" + std::to_string(raw_text.size()) + " chars)");
}

FixtureSet FixtureSet::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open fixture file " + path.string());
  FixtureSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("template_id") || !j.contains("prompt_sha256") ||
        !j.contains("response") || !j["template_id"].is_string() || !j["prompt_sha256"].is_string() ||
        !j["response"].is_string()) {
      throw InvalidArgument(path.filename().string() + ":" + std::to_string(line_no) + " malformed fixture");
    }
    set.add({j["template_id"].get<std::string>(), j["prompt_sha256"].get<std::string>(),
             j["response"].get<std::string>()});
  }
  return set;
}

void FixtureSet::add(FixtureEntry entry) {
  auto key = std::make_pair(entry.template_id, entry.prompt_sha256);
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second] = std::move(entry);
    return;
  }
  index_.emplace(std::move(key), entries_.size());
  entries_.push_back(std::move(entry));
}

const std::string* FixtureSet::find(std::string_view template_id, std::string_view prompt_sha256) const {
  auto it = index_.find({std::string(template_id), std::string(prompt_sha256)});
  return it == index_.end() ? nullptr : &entries_[it->second].response;
}

void FixtureSet::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot write fixture file " + path.string());
  for (const auto& e : entries_) {
    out << json{{"template_id", e.template_id}, {"prompt_sha256", e.prompt_sha256}, {"response", e.response}}.dump()
        << '\n';
  }
}

LlmResponse MockBackend::complete(const LlmRequest& request) {
  if (const auto* hit = fixtures_.find(request.template_id, sha256_hex(request.rendered_prompt))) {
    return {*hit, std::nullopt, {}, false, "fixture"};
  }
  if (!request.original_prompt.empty()) {
    if (const auto* hit = fixtures_.find(request.template_id, sha256_hex(request.original_prompt))) {
      return {*hit, std::nullopt, {}, false, "fixture"};
    }
  }
  return {fallback_response(request), std::nullopt, {}, false, "fallback"};
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)), in_flight_(std::max(1, options_.max_in_flight)) {
  detail::split_url(options_.url);
}

LlmResponse HttpBackend::complete(const LlmRequest& request) {
  const auto target = detail::split_url(options_.url);
  const std::string body = json{{"prompt", request.rendered_prompt}, {"temperature", 0.0}}.dump();

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    httplib::Client client(target.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
    auto res = client.Post(target.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      if (res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout) {
        last_error = "timeout: " + last_error;
      }
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw GatewayError(GatewayError::Kind::unreachable, "llm backend returned HTTP " + std::to_string(res->status));
    }
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("text") || !j["text"].is_string()) {
      throw GatewayError(GatewayError::Kind::parse_failure, "llm backend reply lacks a \"text\" string");
    }
    return {j["text"].get<std::string>(), std::nullopt, {}, false, "remote"};
  }
  const bool timed_out = last_error.rfind("timeout", 0) == 0;
  throw GatewayError(timed_out ? GatewayError::Kind::timeout : GatewayError::Kind::unreachable,
                     "llm backend " + options_.url + " failed after retry: " + last_error);
}

ScriptedBackend::ScriptedBackend(std::shared_ptr<LlmBackend> inner) : inner_(std::move(inner)) {}

void ScriptedBackend::enqueue(std::string_view template_id, std::string response) {
  std::lock_guard lock(mutex_);
  queues_[std::string(template_id)].push_back(std::move(response));
}

LlmResponse ScriptedBackend::complete(const LlmRequest& request) {
  LlmResponse response;
  {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(request.template_id);
    if (it != queues_.end() && !it->second.empty()) {
      response = {std::move(it->second.front()), std::nullopt, {}, false, "script"};
      it->second.pop_front();
    }
  }
  if (response.source.empty()) response = inner_->complete(request);
  std::lock_guard lock(mutex_);
  recorded_.add({request.template_id, sha256_hex(request.rendered_prompt), response.raw_text});
  return response;
}

FixtureSet ScriptedBackend::recorded() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

std::size_t ScriptedBackend::pending(std::string_view template_id) const {
  std::lock_guard lock(mutex_);
  auto it = queues_.find(template_id);
  return it == queues_.end() ? 0 : it->second.size();
}

Gateway::Gateway(std::shared_ptr<LlmBackend> backend, TemplateRegistry registry)
    : backend_(std::move(backend)), registry_(std::move(registry)) {
  if (!backend_) throw InvalidArgument("gateway needs a backend");
}

LlmRequest Gateway::render(std::string_view template_id, const Bindings& bindings) const {
  const auto& tmpl = registry_.get(template_id);
  return LlmRequest{tmpl.template_id(), tmpl.render(bindings), 0.0, bindings, {}};
}

LlmResponse Gateway::complete(const LlmRequest& request) {
  if (!registry_.contains(request.template_id)) {
    throw GatewayError(GatewayError::Kind::unknown_template, "unknown template: " + request.template_id);
  }
  LlmRequest pinned = request;
  pinned.temperature = 0.0;
  auto response = backend_->complete(pinned);
  try {
    response.parsed = parse_structured(response.raw_text, registry_.get(request.template_id).output_contract());
  } catch (const GatewayError& e) {
    response.parse_error = e.what();
    response.schema_violation = e.kind() == GatewayError::Kind::schema_violation;
  }
  return response;
}

StructuredReply Gateway::call(std::string_view template_id, const Bindings& bindings) {
  const auto& contract = registry_.get(template_id).output_contract();
  const LlmRequest first = render(template_id, bindings);
  auto response = complete(first);
  if (response.parsed) return {*response.parsed, std::move(response), 1};

  LlmRequest retry = first;
  retry.original_prompt = first.rendered_prompt;
  retry.rendered_prompt = first.rendered_prompt + "\n\nYour previous reply could not be used: " +
                          response.parse_error + ". Reply again with only a JSON object matching " +
                          contract.describe() + ".";
  auto second = complete(retry);
  if (second.parsed) return {*second.parsed, std::move(second), 2};

  throw GatewayError(second.schema_violation ? GatewayError::Kind::schema_violation : GatewayError::Kind::parse_failure,
                     std::string(template_id) + ": " + second.parse_error + " (after reprompt)");
}

}  // namespace smartaudit::llm
