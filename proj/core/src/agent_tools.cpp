// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>

#include "smartaudit/agent.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"

namespace smartaudit::agent {

using nlohmann::json;

std::string_view to_string(GroupBy g) noexcept {
  switch (g) {
    case GroupBy::tag: return "tag";
    case GroupBy::supplier: return "supplier";
    case GroupBy::category: return "category";
  }
  return "tag";
}

GroupBy parse_group_by(std::string_view s) {
  if (s == "tag") return GroupBy::tag;
  if (s == "supplier") return GroupBy::supplier;
  if (s == "category") return GroupBy::category;
  throw InvalidArgument("unknown group_by: " + std::string(s));
}

CommonalityTable commonality_stats(const copilot::KnowledgeState& kb, GroupBy group_by,
                                   const copilot::SearchFilters& filters) {
  CommonalityTable table;
  table.group_by = group_by;
  std::map<std::string, std::size_t> counts;
  for (const auto* r : kb.filtered(filters)) {
    ++table.records;
    switch (group_by) {
      case GroupBy::tag:
        if (r->tags.empty()) ++counts["untagged"];
        for (const auto& t : r->tags) ++counts[t];
        break;
      case GroupBy::supplier:
        ++counts[r->supplier_id];
        break;
      case GroupBy::category:
        ++counts[r->tags.empty() ? std::string("uncategorized") : r->tags.front()];
        break;
    }
  }
  for (const auto& [key, n] : counts) {
    table.rows.push_back({key, n, 0.0, 0.0});
    table.total += n;
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const CommonalityRow& a, const CommonalityRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  std::size_t running = 0;
  for (auto& row : table.rows) {
    running += row.count;
    row.share = static_cast<double>(row.count) / static_cast<double>(table.total);
    row.cumulative_share = static_cast<double>(running) / static_cast<double>(table.total);
  }
  return table;
}

TrendSeries trend_series(const copilot::KnowledgeState& kb, const copilot::SearchFilters& filters) {
  TrendSeries out;
  std::map<std::pair<int, int>, std::size_t> counts;
  for (const auto* r : kb.filtered(filters)) {
    const Date d = date_of(r->created_at);
    ++counts[{d.year, d.month}];
  }
  if (counts.empty()) return out;
  auto [year, month] = counts.begin()->first;
  const auto last = counts.rbegin()->first;
  while (std::make_pair(year, month) <= last) {
    auto it = counts.find({year, month});
    out.series.push_back({Date{year, month, 1}.month_key(), it == counts.end() ? 0 : it->second});
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return out;
}

FiveWhys five_whys(const std::string& id, const ToolContext& context, int depth) {
  if (depth < 1 || depth > 10) throw InvalidArgument("depth must be in [1,10]");
  if (!context.gateway) throw InvalidArgument("five_whys needs a gateway");
  std::string pattern, description, root_cause;
  if (const auto* r = context.kb ? context.kb->find(id) : nullptr) {
    pattern = r->failure_pattern;
    description = r->tuned_description;
    root_cause = r->root_cause;
  } else {
    const HistoricalIssue* issue = nullptr;
    if (context.history) {
      for (const auto& h : *context.history) {
        if (h.id == id) {
          issue = &h;
          break;
        }
      }
    }
    if (!issue) throw NotFoundError("unknown record or issue: " + id);
    pattern = issue->failure_pattern;
    description = issue->description;
  }
  const auto reply = context.gateway->call(llm::templates::five_whys, {{"failure_pattern", pattern},
                                                                      {"description", description},
                                                                      {"root_cause", root_cause},
                                                                      {"depth", std::to_string(depth)}});
  FiveWhys out;
  out.subject_id = id;
  for (const auto& p : reply.value.at("chain")) {
    out.chain.push_back({p.at("why").get<std::string>(), p.at("because").get<std::string>()});
  }
  if (out.chain.size() != static_cast<std::size_t>(depth)) {
    throw GatewayError(GatewayError::Kind::schema_violation,
                       "five_whys: expected " + std::to_string(depth) + " pairs, got " +
                           std::to_string(out.chain.size()));
  }
  return out;
}

namespace {

struct SectionSpec {
  const char* id;
  const char* title;
};

constexpr SectionSpec kSections[] = {
    {"D0", "Plan"},           {"D1", "Team"},       {"D2", "Problem description"},
    {"D3", "Containment"},    {"D4", "Root cause"}, {"D5", "Corrective actions"},
    {"D6", "Validation"},     {"D7", "Prevention"}, {"D8", "Recognition"},
};

std::string bullet_list(const std::vector<const KnowledgeRecord*>& records, std::string KnowledgeRecord::*field) {
  std::string out;
  for (const auto* r : records) {
    const std::string& value = r->*field;
    if (!out.empty()) out += "\n";
    out += "- " + r->id + ": " + (value.empty() ? std::string("(not recorded)") : value);
  }
  return out;
}

std::string chain_text(const FiveWhys& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.chain.size(); ++i) {
    if (!out.empty()) out += "\n";
    out += std::to_string(i + 1) + ". " + chain.chain[i].why + " " + chain.chain[i].because;
  }
  return out;
}

}  // namespace

EightDReport eight_d_report(const std::vector<std::string>& record_ids, const ToolContext& context) {
  if (record_ids.empty()) throw InvalidArgument("empty record set");
  if (!context.kb || !context.gateway) throw InvalidArgument("eight_d_report needs a knowledge base and a gateway");
  std::vector<const KnowledgeRecord*> records;
  for (const auto& id : record_ids) records.push_back(&context.kb->record(id));

  EightDReport report;
  report.record_ids = record_ids;
  report.root_cause_chain = five_whys(record_ids.front(), context);

  const std::string problem = bullet_list(records, &KnowledgeRecord::tuned_description);
  const std::string root_cause = bullet_list(records, &KnowledgeRecord::root_cause) + "\n\n5 Whys (" +
                                 record_ids.front() + "):\n" + chain_text(report.root_cause_chain);
  const std::string corrective = bullet_list(records, &KnowledgeRecord::corrective_action);

  for (const auto& spec : kSections) {
    EightDSection section{spec.id, spec.title, {}};
    const std::string id = spec.id;
    if (id == "D2") {
      section.content = problem;
    } else if (id == "D4") {
      section.content = root_cause;
    } else if (id == "D5") {
      section.content = corrective;
    } else {
      section.content = context.gateway
                            ->call(llm::templates::eight_d_section, {{"section", id},
                                                                     {"title", spec.title},
                                                                     {"problem", problem},
                                                                     {"root_cause", root_cause},
                                                                     {"corrective_action", corrective}})
                            .value.at("content")
                            .get<std::string>();
    }
    report.sections.push_back(std::move(section));
  }

  std::string md = "# 8D report\n\nRecords:";
  for (const auto& id : record_ids) md += " " + id;
  md += "\n";
  for (const auto& s : report.sections) md += "\n## " + s.id + " " + s.title + "\n\n" + s.content + "\n";
  report.markdown = std::move(md);
  return report;
}

copilot::SearchFilters filters_from_json(const json& j) {
  copilot::SearchFilters f;
  if (j.is_null()) return f;
  if (!j.is_object()) throw InvalidArgument("filters must be an object");
  if (auto it = j.find("supplier"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw InvalidArgument("filters.supplier must be a string");
    f.supplier = it->get<std::string>();
  }
  if (auto it = j.find("tags"); it != j.end() && !it->is_null()) {
    if (it->is_string()) {
      f.tags.push_back(it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& t : *it) {
        if (!t.is_string()) throw InvalidArgument("filters.tags must be strings");
        f.tags.push_back(t.get<std::string>());
      }
    } else {
      throw InvalidArgument("filters.tags must be an array");
    }
  }
  for (const char* key : {"from", "to"}) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw InvalidArgument(std::string("filters.") + key + " must be a date string");
      (std::string(key) == "from" ? f.from : f.to) = Date::parse(it->get<std::string>());
    }
  }
  if (f.from && f.to && *f.to < *f.from) throw InvalidArgument("filters: to is before from");
  return f;
}

json to_json(const copilot::SearchFilters& f) {
  json j = json::object();
  if (f.supplier) j["supplier"] = *f.supplier;
  if (!f.tags.empty()) j["tags"] = f.tags;
  if (f.from) j["from"] = f.from->to_string();
  if (f.to) j["to"] = f.to->to_string();
  return j;
}

namespace {

const json& args_object(const json& args) {
  if (!args.is_object()) throw InvalidArgument("arguments must be an object");
  return args;
}

std::size_t arg_k(const json& args, std::size_t fallback) {
  auto it = args.find("k");
  if (it == args.end()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0 || it->get<long long>() > 100) {
    throw InvalidArgument("k must be an integer in [0,100]");
  }
  return it->get<std::size_t>();
}

json filters_arg(const json& args) {
  auto it = args.find("filters");
  return it == args.end() ? json(nullptr) : *it;
}

json run_search(const json& raw, const ToolContext& ctx) {
  const auto& args = args_object(raw);
  auto q = args.find("query");
  if (q == args.end() || !q->is_string()) throw InvalidArgument("query must be a string");
  const auto mode = copilot::parse_search_mode(args.value("mode", std::string("hybrid")));
  const auto k = arg_k(args, 5);
  const auto filters = filters_from_json(filters_arg(args));
  if (!ctx.kb || !ctx.embedder) throw InvalidArgument("search needs a knowledge base");
  const auto hits = copilot::search_knowledge(*ctx.kb, *ctx.embedder, q->get<std::string>(), mode, k, filters,
                                              ctx.hybrid);
  json out = json::array();
  for (const auto& h : hits) {
    out.push_back({{"record_id", h.record_id},
                   {"score", h.score},
                   {"bm25", h.bm25},
                   {"semantic", h.semantic},
                   {"supplier_id", h.record.supplier_id},
                   {"tags", h.record.tags},
                   {"failure_pattern", h.record.failure_pattern},
                   {"tuned_description", h.record.tuned_description}});
  }
  return {{"query", q->get<std::string>()}, {"mode", copilot::to_string(mode)}, {"hits", out}};
}

json run_commonality(const json& raw, const ToolContext& ctx) {
  const auto& args = args_object(raw);
  const auto group_by = parse_group_by(args.value("group_by", std::string("tag")));
  if (!ctx.kb) throw InvalidArgument("commonality_stats needs a knowledge base");
  return commonality_stats(*ctx.kb, group_by, filters_from_json(filters_arg(args)));
}

json run_trend(const json& raw, const ToolContext& ctx) {
  const auto& args = args_object(raw);
  if (args.value("bucket", std::string("month")) != "month") throw InvalidArgument("bucket must be month");
  if (!ctx.kb) throw InvalidArgument("trend_series needs a knowledge base");
  return trend_series(*ctx.kb, filters_from_json(filters_arg(args)));
}

json run_five_whys(const json& raw, const ToolContext& ctx) {
  const auto& args = args_object(raw);
  auto id = args.find("record_id");
  if (id == args.end() || !id->is_string()) throw InvalidArgument("record_id must be a string");
  int depth = 5;
  if (auto d = args.find("depth"); d != args.end()) {
    if (!d->is_number_integer()) throw InvalidArgument("depth must be an integer");
    depth = d->get<int>();
  }
  return five_whys(id->get<std::string>(), ctx, depth);
}

json run_eight_d(const json& raw, const ToolContext& ctx) {
  const auto& args = args_object(raw);
  auto ids = args.find("record_ids");
  if (ids == args.end() || !ids->is_array()) throw InvalidArgument("record_ids must be an array");
  std::vector<std::string> list;
  for (const auto& v : *ids) {
    if (!v.is_string()) throw InvalidArgument("record_ids must be strings");
    list.push_back(v.get<std::string>());
  }
  return eight_d_report(list, ctx);
}

const json kFilterSchema = {{"type", "object"},
                            {"properties",
                             {{"supplier", {{"type", "string"}}},
                              {"tags", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                              {"from", {{"type", "string"}, {"format", "date"}}},
                              {"to", {{"type", "string"}, {"format", "date"}}}}}};

}  // namespace

ToolRegistry ToolRegistry::defaults() {
  ToolRegistry r;
  r.add({"search_knowledge",
         "Hybrid, BM25 or semantic search over the knowledge base.",
         {{"query", "string"}, {"mode", "hybrid|bm25|semantic"}, {"k", "integer <= 100"}, {"filters", kFilterSchema}},
         {{"hits", "array of {record_id, score, bm25, semantic, supplier_id, tags, failure_pattern, "
                   "tuned_description}"}},
         run_search});
  r.add({"commonality_stats",
         "Frequency table with Pareto shares grouped by tag, supplier or category.",
         {{"group_by", "tag|supplier|category"}, {"filters", kFilterSchema}},
         {{"rows", "array of {key, count, share, cumulative_share}"}, {"total", "integer"}},
         run_commonality});
  r.add({"five_whys",
         "5 Whys chain for a knowledge record or historical issue.",
         {{"record_id", "string"}, {"depth", "integer, default 5"}},
         {{"chain", "array of {why, because}"}},
         run_five_whys});
  r.add({"eight_d_report",
         "8D corrective action report (D0-D8) over one or more records.",
         {{"record_ids", "array of string"}},
         {{"sections", "array of {id, title, content}"}, {"markdown", "string"}},
         run_eight_d});
  r.add({"trend_series",
         "Monthly record counts, contiguous from the first to the last month.",
         {{"filters", kFilterSchema}, {"bucket", "month"}},
         {{"series", "array of {month, count}"}},
         run_trend});
  return r;
}

}  // namespace smartaudit::agent
