// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/copilot.hpp"

#include <algorithm>
#include <set>

#include "smartaudit/errors.hpp"

namespace smartaudit::copilot {

using nlohmann::json;

namespace {

std::string joined(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::string string_field(const json& value, const char* name) {
  const auto& v = value.at(name);
  return v.get<std::string>();
}

}  // namespace

KnowledgeRecord process_finding(const RawFinding& raw, llm::Gateway& gateway, const Taxonomy& taxonomy) {
  const std::string text = canonicalize(raw.free_text);
  if (text.empty()) throw ValidationError({"empty free_text"});

  const auto tuned = gateway.call(llm::templates::tune_description, {{"text", text}});
  KnowledgeRecord record;
  record.tuned_description = string_field(tuned.value, "description");

  const auto pattern = gateway.call(llm::templates::extract_pattern,
                                    {{"text", record.tuned_description},
                                     {"patterns", joined(taxonomy.failure_patterns(), ";")}});
  record.failure_pattern = string_field(pattern.value, "failure_pattern");

  const auto tags = gateway.call(llm::templates::assign_tags, {{"text", record.tuned_description},
                                                               {"categories", joined(taxonomy.categories(), ";")}});
  record.tags = tags.value.at("tags").get<std::vector<std::string>>();

  record.supplier_id = raw.supplier_id;
  record.source_issue_id = raw.source_issue_id;
  record.root_cause = raw.root_cause.value_or("");
  record.corrective_action = raw.corrective_action.value_or("");
  record.created_at = raw.submitted_at;

  std::vector<std::string> problems;
  if (canonicalize(raw.supplier_id).empty()) problems.push_back("empty supplier_id");
  auto more = record_problems(record, taxonomy);
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return validate_record(std::move(record), taxonomy);
}

CodSummary summarize_cod(const KnowledgeRecord& record, llm::Gateway& gateway, const llm::Embedder& embedder,
                         int rounds, int max_tokens) {
  if (rounds < 1 || rounds > 3) throw InvalidArgument("cod rounds must be in [1,3]");
  if (max_tokens < 1) throw InvalidArgument("cod max_tokens must be >= 1");
  CodSummary out;
  out.record_id = record.id;
  std::string previous;
  for (int r = 1; r <= rounds; ++r) {
    const auto reply = gateway.call(llm::templates::cod_summarize, {{"description", record.tuned_description},
                                                                    {"round", std::to_string(r)},
                                                                    {"max_tokens", std::to_string(max_tokens)},
                                                                    {"previous", previous}});
    auto summary = canonicalize(string_field(reply.value, "summary"));
    const auto n = text::tokenize(summary).size();
    if (n == 0 || n > static_cast<std::size_t>(max_tokens)) {
      throw GatewayError(GatewayError::Kind::schema_violation,
                         "cod_summarize: round " + std::to_string(r) + " has " + std::to_string(n) +
                             " tokens, allowed 1.." + std::to_string(max_tokens));
    }
    previous = summary;
    out.rounds.push_back(std::move(summary));
  }
  out.final_embedding = embedder.embed(out.rounds.back());
  return out;
}

QualityScore evaluate_quality(const KnowledgeRecord& record, llm::Gateway& gateway) {
  const auto reply = gateway.call(llm::templates::quality_judge, {{"description", record.tuned_description},
                                                                  {"root_cause", record.root_cause},
                                                                  {"corrective_action", record.corrective_action}});
  const auto& v = reply.value;
  return QualityScore::from_dimensions(v.at("root_cause_depth").get<int>(), v.at("causal_chain_validity").get<int>(),
                                       v.at("corrective_action_specificity").get<int>(),
                                       v.at("evidence_support").get<int>());
}

std::string_view to_string(SearchMode mode) noexcept {
  switch (mode) {
    case SearchMode::hybrid: return "hybrid";
    case SearchMode::bm25: return "bm25";
    case SearchMode::semantic: return "semantic";
  }
  return "hybrid";
}

SearchMode parse_search_mode(std::string_view s) {
  if (s == "hybrid") return SearchMode::hybrid;
  if (s == "bm25") return SearchMode::bm25;
  if (s == "semantic") return SearchMode::semantic;
  throw InvalidArgument("unknown mode: " + std::string(s));
}

bool SearchFilters::matches(const KnowledgeRecord& record) const {
  if (supplier && record.supplier_id != *supplier) return false;
  for (const auto& tag : tags) {
    if (std::find(record.tags.begin(), record.tags.end(), tag) == record.tags.end()) return false;
  }
  if (from || to) {
    const Date d = date_of(record.created_at);
    if (from && d < *from) return false;
    if (to && d > *to) return false;
  }
  return true;
}

KnowledgeState::KnowledgeState(std::size_t dimension) : full_(dimension), summary_(dimension) {}

const KnowledgeRecord& KnowledgeState::record(const std::string& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw NotFoundError("unknown record: " + id);
  return it->second;
}

const KnowledgeRecord* KnowledgeState::find(const std::string& id) const noexcept {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

const KnowledgeRecord* KnowledgeState::find_by_hash(const std::string& hash) const noexcept {
  auto it = by_hash_.find(hash);
  return it == by_hash_.end() ? nullptr : find(it->second);
}

std::vector<const KnowledgeRecord*> KnowledgeState::filtered(const SearchFilters& filters) const {
  std::vector<const KnowledgeRecord*> out;
  for (const auto& [id, r] : records_) {
    if (filters.matches(r)) out.push_back(&r);
  }
  return out;
}

std::string indexed_text(const KnowledgeRecord& record) { return record.tuned_description; }

std::string summary_text(const KnowledgeRecord& record) {
  return record.summary_rounds.empty() ? std::string{} : record.summary_rounds.back();
}

void KnowledgeState::upsert(const KnowledgeRecord& record, const llm::Embedder& embedder) {
  if (record.id.empty()) throw InvalidArgument("record without id");
  if (auto it = records_.find(record.id); it != records_.end()) {
    by_hash_.erase(it->second.content_hash);
    bm25_.remove(record.id);
    full_.remove(record.id);
    summary_.remove(record.id);
  }
  bm25_.add_text(record.id, indexed_text(record));
  full_.add(record.id, embedder.embed(indexed_text(record)));
  if (const auto s = summary_text(record); !s.empty()) summary_.add(record.id, embedder.embed(s));
  by_hash_[record.content_hash] = record.id;
  records_.insert_or_assign(record.id, record);
}

text::IndexSnapshotData KnowledgeState::export_indexes() const {
  text::IndexSnapshotData data;
  data.dimension = static_cast<std::uint32_t>(full_.dimension());
  data.bm25_params = bm25_.params();
  data.bm25_docs = bm25_.export_documents();
  for (const auto* section : {&full_, &summary_}) {
    text::IndexSnapshotData::VectorSection out;
    out.name = section == &full_ ? "full" : "summary";
    for (const auto& id : section->ids()) {
      const auto v = section->vector(id);
      out.entries.emplace_back(id, std::vector<double>(v.begin(), v.end()));
    }
    data.vector_sections.push_back(std::move(out));
  }
  return data;
}

KnowledgeState KnowledgeState::restore(const text::IndexSnapshotData& data,
                                       const std::vector<KnowledgeRecord>& records) {
  KnowledgeState state(data.dimension);
  state.bm25_ = text::Bm25Index(data.bm25_params);
  for (const auto& r : records) {
    state.by_hash_[r.content_hash] = r.id;
    state.records_.insert_or_assign(r.id, r);
  }
  // Rebuild the hash map from final versions only.
  state.by_hash_.clear();
  for (const auto& [id, r] : state.records_) state.by_hash_[r.content_hash] = id;

  if (data.bm25_docs.size() != state.records_.size()) {
    throw StorageError("snapshot covers " + std::to_string(data.bm25_docs.size()) + " documents, log has " +
                       std::to_string(state.records_.size()) + " records");
  }
  for (const auto& doc : data.bm25_docs) {
    if (!state.records_.count(doc.id)) throw StorageError("snapshot document not in log: " + doc.id);
    state.bm25_.import_document(doc);
  }
  for (const auto& section : data.vector_sections) {
    text::VectorIndex* target = nullptr;
    if (section.name == "full") target = &state.full_;
    if (section.name == "summary") target = &state.summary_;
    if (!target) throw StorageError("unknown snapshot section: " + section.name);
    for (const auto& [id, vec] : section.entries) {
      if (!state.records_.count(id)) throw StorageError("snapshot vector not in log: " + id);
      target->add_unit(id, vec);
    }
  }
  if (state.full_.size() != state.records_.size()) throw StorageError("snapshot is missing full-text vectors");
  return state;
}

double KnowledgeState::semantic_score(const std::string& id, std::span<const double> query) const {
  double best = 0.0;
  if (full_.contains(id)) best = std::max(best, full_.score(id, query));
  if (summary_.contains(id)) best = std::max(best, summary_.score(id, query));
  return best;
}

text::RankedList KnowledgeState::semantic_search(std::span<const double> query, std::size_t k,
                                                 const text::DocFilter& filter) const {
  if (k == 0) return {};
  std::vector<text::ScoredDoc> docs;
  for (const auto& [id, r] : records_) {
    if (filter && !filter(id)) continue;
    const double s = semantic_score(id, query);
    if (s > 0.0) docs.push_back({id, s});
  }
  return text::RankedList::from_unsorted(std::move(docs), k);
}

std::vector<SearchHit> search_knowledge(const KnowledgeState& state, const llm::Embedder& embedder,
                                        std::string_view query, SearchMode mode, std::size_t k,
                                        const SearchFilters& filters, const text::HybridParams& params) {
  if (k == 0) return {};
  text::DocFilter filter;
  if (!filters.empty()) {
    filter = [&](const text::DocId& id) {
      const auto* r = state.find(id);
      return r != nullptr && filters.matches(*r);
    };
  }
  const auto tokens = text::tokenize(query);
  const auto qvec = embedder.embed(query);

  text::RankedList ranked;
  switch (mode) {
    case SearchMode::bm25:
      ranked = state.bm25().search(tokens, k, filter);
      break;
    case SearchMode::semantic:
      ranked = state.semantic_search(qvec, k, filter);
      break;
    case SearchMode::hybrid: {
      const auto depth = text::candidate_depth(k, params);
      const std::vector<text::RankedList> lists{state.bm25().search(tokens, depth, filter),
                                                state.semantic_search(qvec, depth, filter)};
      ranked = text::rrf_fuse(lists, k, params.rrf_k0);
      break;
    }
  }

  std::vector<SearchHit> hits;
  hits.reserve(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& doc = ranked[i];
    SearchHit hit;
    hit.record_id = doc.doc_id;
    hit.score = doc.score;
    hit.bm25 = state.bm25().score(tokens, doc.doc_id);
    hit.semantic = state.semantic_score(doc.doc_id, qvec);
    hit.rank = i + 1;
    hit.record = state.record(doc.doc_id);
    hits.push_back(std::move(hit));
  }
  return hits;
}

std::string_view to_string(DedupStatus status) noexcept {
  switch (status) {
    case DedupStatus::stored: return "stored";
    case DedupStatus::duplicate: return "duplicate";
    case DedupStatus::near_duplicate: return "near_duplicate";
  }
  return "stored";
}

ConsolidationPlan plan_consolidation(const KnowledgeState& state, KnowledgeRecord record,
                                     const llm::Embedder& embedder, double near_duplicate_threshold) {
  ConsolidationPlan plan;
  if (const auto* existing = state.find_by_hash(record.content_hash)) {
    plan.status = DedupStatus::duplicate;
    plan.record = *existing;
    plan.best_similarity = 1.0;
    return plan;
  }
  record.near_duplicate_of.reset();
  const auto& full = state.full_vectors();
  if (full.size() > 0) {
    const auto best = full.search(embedder.embed(indexed_text(record)), 1);
    if (!best.empty()) {
      plan.best_similarity = best[0].score;
      if (best[0].score >= near_duplicate_threshold && best[0].doc_id != record.id) {
        plan.status = DedupStatus::near_duplicate;
        plan.near_duplicate_of = best[0].doc_id;
        record.near_duplicate_of = best[0].doc_id;
      }
    }
  }
  plan.record = std::move(record);
  return plan;
}

ConsolidationPlan consolidate(KnowledgeState& state, KnowledgeRecord record, const llm::Embedder& embedder,
                              double near_duplicate_threshold) {
  auto plan = plan_consolidation(state, std::move(record), embedder, near_duplicate_threshold);
  if (plan.status != DedupStatus::duplicate) state.upsert(plan.record, embedder);
  return plan;
}

Scorecard supplier_scorecard(const std::string& supplier_id, const KnowledgeState& state) {
  Scorecard card;
  card.supplier_id = supplier_id;
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
  };
  std::map<std::string, Acc> months;
  double rc = 0, cc = 0, ca = 0, ev = 0, overall = 0;
  for (const auto& [id, r] : state.records()) {
    if (r.supplier_id != supplier_id) continue;
    ++card.record_count;
    if (!r.quality) continue;
    ++card.count;
    const auto& q = *r.quality;
    overall += q.overall;
    rc += q.root_cause_depth;
    cc += q.causal_chain_validity;
    ca += q.corrective_action_specificity;
    ev += q.evidence_support;
    auto& m = months[date_of(r.created_at).month_key()];
    ++m.n;
    m.sum += q.overall;
  }
  if (card.count > 0) {
    const double n = static_cast<double>(card.count);
    card.mean_overall = overall / n;
    card.mean_root_cause_depth = rc / n;
    card.mean_causal_chain_validity = cc / n;
    card.mean_corrective_action_specificity = ca / n;
    card.mean_evidence_support = ev / n;
  }
  for (const auto& [month, acc] : months) {
    card.trend.push_back({month, acc.n, acc.sum / static_cast<double>(acc.n)});
  }
  return card;
}

}  // namespace smartaudit::copilot
