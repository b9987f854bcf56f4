// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace smartaudit::llm {

using Bindings = std::map<std::string, std::string>;

namespace templates {
inline constexpr std::string_view tune_description = "tune_description";
inline constexpr std::string_view extract_pattern = "extract_pattern";
inline constexpr std::string_view assign_tags = "assign_tags";
inline constexpr std::string_view cod_summarize = "cod_summarize";
inline constexpr std::string_view quality_judge = "quality_judge";
inline constexpr std::string_view intent_classify = "intent_classify";
inline constexpr std::string_view agent_step = "agent_step";
inline constexpr std::string_view five_whys = "five_whys";
inline constexpr std::string_view eight_d_section = "eight_d_section";
}  // namespace templates

struct FieldSpec {
  enum class Kind { string, integer, string_array, object, object_array };

  std::string name;
  Kind kind = Kind::string;
  bool required = true;
  std::optional<long long> min;
  std::optional<long long> max;
  // For object_array: keys every element must carry as strings.
  std::vector<std::string> item_keys;
};

// Expected shape of the JSON block a template's reply must contain.
// Unknown extra fields are accepted and ignored.
struct OutputContract {
  std::vector<FieldSpec> fields;

  std::string describe() const;
};

class PromptTemplate {
 public:
  PromptTemplate(std::string template_id, std::string body, OutputContract contract);

  const std::string& template_id() const noexcept { return template_id_; }
  const std::string& body() const noexcept { return body_; }
  const OutputContract& output_contract() const noexcept { return contract_; }

  // Names of every {{placeholder}} in the body, in first-use order.
  std::vector<std::string> placeholders() const;
  // throws InvalidArgument if a placeholder has no binding
  std::string render(const Bindings& bindings) const;

 private:
  std::string template_id_;
  std::string body_;
  OutputContract contract_;
};

class TemplateRegistry {
 public:
  // Registers the nine built-in templates.
  static TemplateRegistry defaults();

  void add(PromptTemplate tmpl);  // throws InvalidArgument on duplicate id
  const PromptTemplate& get(std::string_view template_id) const;
  bool contains(std::string_view template_id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct LlmRequest {
  std::string template_id;
  std::string rendered_prompt;
  double temperature = 0.0;
  // Values the prompt was rendered from; rule-based responders read these
  // instead of re-parsing prose.
  Bindings bindings;
  // Set on a reprompt: the prompt of the failed first attempt.
  std::string original_prompt;
};

struct LlmResponse {
  std::string raw_text;
  std::optional<nlohmann::json> parsed;
  std::string parse_error;
  // True when a JSON block was found but broke the contract.
  bool schema_violation = false;
  // fixture | fallback | remote | script
  std::string source;
};

// Locates the first well-formed JSON object in raw_text and validates it.
// throws GatewayError(parse_failure) when no object is found and
// GatewayError(schema_violation) when the object breaks the contract.
nlohmann::json parse_structured(std::string_view raw_text, const OutputContract& contract);

struct FixtureEntry {
  std::string template_id;
  std::string prompt_sha256;
  std::string response;
};

// Scripted replies keyed by (template_id, sha256 of the rendered prompt).
class FixtureSet {
 public:
  static FixtureSet load_jsonl(const std::filesystem::path& path);  // throws InvalidArgument

  void add(FixtureEntry entry);
  const std::string* find(std::string_view template_id, std::string_view prompt_sha256) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<FixtureEntry>& entries() const noexcept { return entries_; }
  void write_jsonl(const std::filesystem::path& path) const;

 private:
  std::vector<FixtureEntry> entries_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
};

// Deterministic rule-based reply for a template, computed from the request
// bindings. Returns JSON text.
std::string fallback_response(const LlmRequest& request);

// Fixture lookup, then rule-based fallback. No shared mutable state.
//
// A reprompt whose own digest misses the fixtures resolves like the first
// attempt did, so a fixture that breaks its contract keeps breaking it.
class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(FixtureSet fixtures = {}) : fixtures_(std::move(fixtures)) {}

  LlmResponse complete(const LlmRequest& request) override;
  const FixtureSet& fixtures() const noexcept { return fixtures_; }

 private:
  FixtureSet fixtures_;
};

struct HttpBackendOptions {
  std::string url;
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 4;
};

// POST {"prompt", "temperature"} -> {"text"}; one retry on transport error
// or 5xx.
class HttpBackend final : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  LlmResponse complete(const LlmRequest& request) override;

 private:
  HttpBackendOptions options_;
  std::counting_semaphore<1024> in_flight_;
};

// Replays queued replies per template, delegating to an inner backend once a
// queue is empty. Every exchange is recorded so a run can be frozen into a
// fixture file.
class ScriptedBackend final : public LlmBackend {
 public:
  explicit ScriptedBackend(std::shared_ptr<LlmBackend> inner = std::make_shared<MockBackend>());

  void enqueue(std::string_view template_id, std::string response);
  LlmResponse complete(const LlmRequest& request) override;
  FixtureSet recorded() const;
  // Replies still queued for a template.
  std::size_t pending(std::string_view template_id) const;

 private:
  std::shared_ptr<LlmBackend> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<std::string>, std::less<>> queues_;
  FixtureSet recorded_;
};

struct StructuredReply {
  nlohmann::json value;
  LlmResponse response;
  int attempts = 1;
};

// Renders templates, calls the backend at temperature 0, and enforces the
// output contract with one reprompt.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<LlmBackend> backend, TemplateRegistry registry = TemplateRegistry::defaults());

  const TemplateRegistry& registry() const noexcept { return registry_; }
  LlmBackend& backend() noexcept { return *backend_; }

  LlmRequest render(std::string_view template_id, const Bindings& bindings) const;
  LlmResponse complete(const LlmRequest& request);
  StructuredReply call(std::string_view template_id, const Bindings& bindings);

 private:
  std::shared_ptr<LlmBackend> backend_;
  TemplateRegistry registry_;
};

// Keyword intent table shared by the intent_classify fallback and the agent.
std::string keyword_intent(std::string_view request);

}  // namespace smartaudit::llm
