// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/engine.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"

namespace smartaudit {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(FindingStatus status) noexcept {
  switch (status) {
    case FindingStatus::stored: return "stored";
    case FindingStatus::duplicate: return "duplicate";
    case FindingStatus::near_duplicate: return "near_duplicate";
    case FindingStatus::quarantined: return "quarantined";
  }
  return "stored";
}

json to_json(const FindingResult& r) {
  json j{{"status", to_string(r.status)},
         {"record", r.record ? json(*r.record) : json(nullptr)},
         {"duplicate_of", r.duplicate_of ? json(*r.duplicate_of) : json(nullptr)}};
  if (r.quarantine) {
    j["quarantine_id"] = r.quarantine->id;
    j["reason"] = r.quarantine->reason;
  } else {
    j["quarantine_id"] = nullptr;
  }
  return j;
}

std::string IngestSummary::line() const {
  return "ingested " + std::to_string(ingested) + ", duplicates " + std::to_string(duplicates) + ", quarantined " +
         std::to_string(quarantined);
}

namespace {

Taxonomy load_taxonomy(const store::DataFiles& files) {
  if (!fs::exists(files.taxonomy())) return Taxonomy::default_6m();
  std::ifstream in(files.taxonomy());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode<Taxonomy>(parse_json_text(text, "taxonomy.json"), "taxonomy.json");
}

std::shared_ptr<const llm::Embedder> make_embedder(const Config& c) {
  if (c.embed.backend == "http") {
    if (c.embed.url.empty()) throw InvalidArgument("embed backend http needs AUDIT_EMBED_URL");
    return std::make_shared<llm::HttpEmbedder>(c.embed.url, c.embed.dimension, c.embed.timeout, c.llm.max_in_flight);
  }
  return std::make_shared<llm::HashEmbedder>(c.embed.dimension);
}

std::shared_ptr<llm::LlmBackend> make_backend(const Config& c, const store::DataFiles& files) {
  if (c.llm.backend == "http") {
    if (c.llm.url.empty()) throw InvalidArgument("llm backend http needs AUDIT_LLM_URL");
    return std::make_shared<llm::HttpBackend>(
        llm::HttpBackendOptions{c.llm.url, c.llm.api_key, c.llm.timeout, c.llm.max_in_flight});
  }
  llm::FixtureSet fixtures;
  if (!c.llm.fixtures.empty()) {
    fs::path p = c.llm.fixtures;
    if (p.is_relative()) p = files.root / p;
    if (fs::exists(p)) fixtures = llm::FixtureSet::load_jsonl(p);
  }
  return std::make_shared<llm::MockBackend>(std::move(fixtures));
}

Date today() { return date_of(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now())); }

}  // namespace

Engine::Engine(Config config, store::DataFiles files, EngineOptions options)
    : config_(std::move(config)), options_(std::move(options)), tools_(agent::ToolRegistry::defaults()) {
  taxonomy_ = load_taxonomy(files);
  embedder_ = options_.embedder ? options_.embedder : make_embedder(config_);
  auto backend = options_.backend ? options_.backend : make_backend(config_, files);
  gateway_ = std::make_unique<llm::Gateway>(std::move(backend));

  auto loaded = store::load(files, *embedder_, options_.load_mode);
  const auto warn = options_.warn ? options_.warn : [](const std::string& w) { std::cerr << "warning: " << w << "\n"; };
  for (const auto& w : loaded.warnings) warn(w);
  snapshot_used_ = loaded.snapshot_used;

  store_ = std::make_unique<store::Store>(files, config_.store.snapshot_retention);
  kb_.update([&](copilot::KnowledgeState& m) { m = std::move(loaded.kb); });

  for (const auto& c : loaded.checklists) known_suppliers_.push_back(c.supplier_id);
  audits_ = std::move(loaded.audits);
  rebuild_history(std::move(loaded.history));
  model_ = std::make_shared<const risk::RiskModel>(risk::RiskModel::untrained(risk::kFeatureCount));
  if (!audits_.empty()) train();

  std::uint64_t max_id = 0;
  for (const auto& id : store_->session_ids()) {
    if (id.rfind("s-", 0) == 0) {
      try {
        max_id = std::max<std::uint64_t>(max_id, std::stoull(id.substr(2)));
      } catch (const std::exception&) {
      }
    }
  }
  session_counter_ = max_id;
}

Engine::~Engine() = default;

std::unique_ptr<Engine> Engine::open(const fs::path& data_dir, Config config, EngineOptions options) {
  fs::create_directories(data_dir);
  return std::unique_ptr<Engine>(new Engine(std::move(config), store::DataFiles{data_dir}, std::move(options)));
}

std::shared_ptr<const risk::HistoryIndex> Engine::history() const {
  std::lock_guard lock(published_);
  return history_;
}

std::shared_ptr<const risk::RiskModel> Engine::model() const {
  std::lock_guard lock(published_);
  return model_;
}

void Engine::rebuild_history(std::vector<HistoricalIssue> issues) {
  auto shared = std::make_shared<const std::vector<HistoricalIssue>>(issues);
  auto index = std::make_shared<const risk::HistoryIndex>(std::move(issues), embedder_);
  std::lock_guard lock(published_);
  history_issues_ = std::move(shared);
  history_ = std::move(index);
}

std::vector<risk::RiskAssessment> Engine::plan(const Checklist& checklist, std::optional<std::size_t> top_n) const {
  if (auto p = checklist_problems(checklist); !p.empty()) throw ValidationError(std::move(p));
  if (auto p = factor_problems(checklist); !p.empty()) {
    std::string msg;
    for (const auto& s : p) msg += (msg.empty() ? "" : "; ") + s;
    throw FactorOutOfRange(msg);
  }
  const auto h = history();
  const auto m = model();
  auto risk_config = config_.risk;
  if (top_n) risk_config.top_n = *top_n;
  return risk::assess_checklist(checklist, *h, *m, risk_config);
}

risk::RiskModel Engine::train() {
  const auto h = history();
  std::vector<AuditObservation> audits;
  {
    std::lock_guard lock(writer_);
    audits = audits_;
  }
  risk::RiskModel model = risk::RiskModel::untrained(risk::kFeatureCount);
  if (!audits.empty()) {
    const auto samples = risk::observation_samples(audits, *h, config_.risk);
    model = risk::train_risk_model(samples, config_.risk.train);
  }
  std::lock_guard lock(published_);
  model_ = std::make_shared<const risk::RiskModel>(model);
  return model;
}

void Engine::add_history(const std::vector<HistoricalIssue>& issues) {
  std::vector<std::string> problems;
  const Date now = today();
  for (const auto& issue : issues) {
    for (const auto& p : issue_problems(issue, taxonomy_, now)) problems.push_back(issue.id + ": " + p);
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  std::vector<HistoricalIssue> all;
  {
    std::lock_guard lock(writer_);
    all = *history_issues_;
    std::set<std::string> ids;
    for (const auto& i : all) ids.insert(i.id);
    for (const auto& issue : issues) {
      if (!ids.insert(issue.id).second) throw ValidationError({"duplicate issue id: " + issue.id});
    }
    for (const auto& issue : issues) {
      store_->append_history(issue);
      all.push_back(issue);
    }
  }
  rebuild_history(std::move(all));
}

void Engine::add_audits(const std::vector<AuditObservation>& observations) {
  {
    std::lock_guard lock(writer_);
    for (const auto& o : observations) {
      store_->append_audit(o);
      audits_.push_back(o);
    }
  }
  train();
}

FindingResult Engine::quarantine(json raw, std::string stage, std::string reason, bool gateway_failure) {
  std::lock_guard lock(writer_);
  FindingResult result;
  result.status = FindingStatus::quarantined;
  result.gateway_failure = gateway_failure;
  result.quarantine = store_->append_quarantine({"", std::move(stage), std::move(reason), std::move(raw)});
  return result;
}

FindingResult Engine::submit_finding(const copilot::RawFinding& raw) {
  if (canonicalize(raw.free_text).empty()) throw ValidationError({"empty free_text"});
  KnowledgeRecord record;
  try {
    record = copilot::process_finding(raw, *gateway_, taxonomy_);
  } catch (const GatewayError& e) {
    return quarantine(json(raw), "process", e.what(), true);
  } catch (const ValidationError& e) {
    return quarantine(json(raw), "process", e.what(), false);
  }

  if (const auto* existing = knowledge()->find_by_hash(record.content_hash)) {
    FindingResult result;
    result.status = FindingStatus::duplicate;
    result.record = *existing;
    result.duplicate_of = existing->id;
    return result;
  }

  try {
    const auto cod = copilot::summarize_cod(record, *gateway_, *embedder_, config_.copilot.cod_rounds,
                                            config_.copilot.cod_max_tokens);
    record.summary_rounds = cod.rounds;
  } catch (const GatewayError& e) {
    return quarantine(json(raw), "summarize", e.what(), true);
  }

  copilot::ConsolidationPlan plan;
  {
    std::lock_guard lock(writer_);
    kb_.update([&](copilot::KnowledgeState& master) {
      plan = copilot::plan_consolidation(master, std::move(record), *embedder_,
                                         config_.copilot.near_duplicate_threshold);
      if (plan.status == copilot::DedupStatus::duplicate) return;
      store_->append_record(plan.record);
      master.upsert(plan.record, *embedder_);
    });
  }
  FindingResult result;
  result.record = plan.record;
  switch (plan.status) {
    case copilot::DedupStatus::duplicate:
      result.status = FindingStatus::duplicate;
      result.duplicate_of = plan.record.id;
      break;
    case copilot::DedupStatus::near_duplicate:
      result.status = FindingStatus::near_duplicate;
      result.duplicate_of = plan.near_duplicate_of;
      break;
    case copilot::DedupStatus::stored:
      result.status = FindingStatus::stored;
      break;
  }
  return result;
}

IngestSummary Engine::ingest_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  IngestSummary summary;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    FindingResult result;
    try {
      const auto raw = decode<copilot::RawFinding>(parse_json_text(line, "line " + std::to_string(number)),
                                                  "line " + std::to_string(number));
      result = submit_finding(raw);
    } catch (const InvalidArgument& e) {
      result = quarantine(json(line), "parse", e.what(), false);
    } catch (const ValidationError& e) {
      result = quarantine(json(line), "parse", e.what(), false);
    }
    switch (result.status) {
      case FindingStatus::stored: ++summary.ingested; break;
      case FindingStatus::near_duplicate:
        ++summary.ingested;
        ++summary.near_duplicates;
        break;
      case FindingStatus::duplicate: ++summary.duplicates; break;
      case FindingStatus::quarantined: ++summary.quarantined; break;
    }
  }
  return summary;
}

std::vector<copilot::SearchHit> Engine::search(std::string_view query, copilot::SearchMode mode, std::size_t k,
                                               const copilot::SearchFilters& filters) const {
  if (k > 100) throw InvalidArgument("k must be <= 100");
  return copilot::search_knowledge(*knowledge(), *embedder_, query, mode, k, filters, config_.copilot.hybrid);
}

QualityScore Engine::evaluate(const std::string& record_id) {
  const auto snap = knowledge();
  const KnowledgeRecord record = snap->record(record_id);
  const QualityScore score = copilot::evaluate_quality(record, *gateway_);
  std::lock_guard lock(writer_);
  kb_.update([&](copilot::KnowledgeState& master) {
    KnowledgeRecord updated = master.record(record_id);
    updated.quality = score;
    store_->append_record(updated);
    master.upsert(updated, *embedder_);
  });
  return score;
}

copilot::Scorecard Engine::scorecard(const std::string& supplier_id) const {
  const auto snap = knowledge();
  auto card = copilot::supplier_scorecard(supplier_id, *snap);
  if (card.record_count > 0) return card;
  bool known = std::find(known_suppliers_.begin(), known_suppliers_.end(), supplier_id) != known_suppliers_.end();
  if (!known) {
    const auto h = history();
    known = std::any_of(h->issues().begin(), h->issues().end(),
                        [&](const HistoricalIssue& i) { return i.supplier_id == supplier_id; });
  }
  if (!known) {
    std::lock_guard lock(writer_);
    known = std::any_of(audits_.begin(), audits_.end(),
                        [&](const AuditObservation& o) { return o.supplier_id == supplier_id; });
  }
  if (!known) throw NotFoundError("unknown supplier: " + supplier_id);
  return card;
}

agent::CommonalityTable Engine::commonality(agent::GroupBy group_by, const copilot::SearchFilters& filters) const {
  return agent::commonality_stats(*knowledge(), group_by, filters);
}

agent::TrendSeries Engine::trend(const copilot::SearchFilters& filters) const {
  return agent::trend_series(*knowledge(), filters);
}

std::string Engine::next_session_id() {
  const auto n = ++session_counter_;
  char buf[32];
  std::snprintf(buf, sizeof buf, "s-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

agent::ToolContext Engine::tool_context() const {
  agent::ToolContext ctx;
  ctx.kb = knowledge();
  {
    std::lock_guard lock(published_);
    ctx.history = history_issues_;
  }
  ctx.gateway = gateway_.get();
  ctx.embedder = embedder_.get();
  ctx.hybrid = config_.copilot.hybrid;
  return ctx;
}

agent::AgentSession Engine::run_agent(std::string_view request, const agent::SessionOptions& options) {
  if (canonicalize(request).empty()) throw ValidationError({"empty request"});
  agent::SessionOptions opts = options;
  if (opts.session_id.empty()) opts.session_id = next_session_id();
  if (opts.parent_session_id) session(*opts.parent_session_id);  // must exist
  auto session = agent::run_session(request, tools_, *gateway_, tool_context(), opts);
  std::lock_guard lock(writer_);
  store_->save_session(session);
  return session;
}

agent::AgentSession Engine::run_agent(std::string_view request) {
  agent::SessionOptions opts;
  opts.step_limit = config_.agent.step_limit;
  return run_agent(request, opts);
}

agent::AgentSession Engine::session(const std::string& id) const { return store_->load_session(id); }

store::SnapshotInfo Engine::snapshot() {
  std::lock_guard lock(writer_);
  return store_->snapshot(*kb_.snapshot());
}

json Engine::state_json() const {
  json out = json::array();
  for (const auto& [id, r] : knowledge()->records()) out.push_back(r);
  return out;
}

}  // namespace smartaudit
