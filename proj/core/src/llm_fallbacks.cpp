// SPDX-License-Identifier: Apache-2.0
// Deterministic rule-based replies used by the mock backend when no fixture
// matches. Every reply is a JSON block satisfying the template's contract.
#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "smartaudit/domain.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/hashing.hpp"
#include "smartaudit/llm_gateway.hpp"
#include "smartaudit/text_index.hpp"

namespace smartaudit::llm {

using nlohmann::json;

namespace {

std::string binding(const LlmRequest& r, const std::string& key) {
  auto it = r.bindings.find(key);
  return it == r.bindings.end() ? std::string{} : it->second;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(';', start);
    if (end == std::string::npos) end = s.size();
    auto item = canonicalize(std::string_view(s).substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& words, std::string_view sep = " ") {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += sep;
    out += w;
  }
  return out;
}

std::size_t parse_size(const std::string& s, std::size_t fallback) {
  try {
    return s.empty() ? fallback : static_cast<std::size_t>(std::stoul(s));
  } catch (const std::exception&) {
    return fallback;
  }
}

std::string percent(double share) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", share * 100.0);
  return buf;
}

std::string extract_pattern(const LlmRequest& r) {
  const auto tokens = text::tokenize(binding(r, "text"));
  const std::set<std::string> present(tokens.begin(), tokens.end());
  for (const auto& pattern : split_list(binding(r, "patterns"))) {
    const auto needed = text::tokenize(pattern);
    if (!needed.empty() &&
        std::all_of(needed.begin(), needed.end(), [&](const std::string& t) { return present.count(t) != 0; })) {
      return pattern;
    }
  }
  return "unclassified";
}

std::vector<std::string> assign_tags(const LlmRequest& r) {
  const auto tokens = text::tokenize(binding(r, "text"));
  const std::set<std::string> present(tokens.begin(), tokens.end());
  std::vector<std::string> tags;
  for (const auto& key : split_list(binding(r, "categories"))) {
    if (present.count(key)) tags.push_back(key);
  }
  return tags;
}

// Round r keeps the first (max_tokens - (r - 1)) description tokens and
// appends the r - 1 most frequent content tokens (ties by first occurrence).
std::string cod_round(const LlmRequest& r) {
  const auto tokens = text::tokenize(binding(r, "description"));
  const std::size_t max_tokens = std::max<std::size_t>(1, parse_size(binding(r, "max_tokens"), 60));
  const std::size_t round = std::max<std::size_t>(1, parse_size(binding(r, "round"), 1));
  const std::size_t extra = std::min(round - 1, max_tokens - 1);

  std::map<std::string, std::pair<std::size_t, std::size_t>> freq;  // token -> (count, first position)
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (text::is_stopword(tokens[i])) continue;
    auto [it, inserted] = freq.try_emplace(tokens[i], 0, i);
    ++it->second.first;
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });

  std::vector<std::string> out(tokens.begin(),
                               tokens.begin() + static_cast<std::ptrdiff_t>(std::min(tokens.size(), max_tokens - extra)));
  for (std::size_t i = 0; i < extra && i < ranked.size(); ++i) out.push_back(ranked[i].first);
  if (out.empty()) out.push_back("summary");
  return join(out);
}

int count_in(const std::vector<std::string>& tokens, const std::set<std::string>& words) {
  return static_cast<int>(std::count_if(tokens.begin(), tokens.end(), [&](const auto& t) { return words.count(t) != 0; }));
}

bool has_digit(const std::vector<std::string>& tokens) {
  return std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    return std::any_of(t.begin(), t.end(), [](unsigned char c) { return c >= '0' && c <= '9'; });
  });
}

json quality_judge(const LlmRequest& r) {
  static const std::set<std::string> kCausal = {"because", "due", "caused", "causing", "led", "leads",
                                                "resulting", "resulted", "therefore", "since"};
  static const std::set<std::string> kEvidence = {"measured", "measurement", "inspection", "inspected", "data",
                                                  "test", "tested", "sample", "samples", "verified", "verification",
                                                  "analysis", "cpk", "spc", "xray", "trial", "photo", "log"};
  const auto rc = text::tokenize(binding(r, "root_cause"));
  const auto ca = text::tokenize(binding(r, "corrective_action"));
  const auto rc_content = text::tokenize(binding(r, "root_cause"), true);
  const auto ca_content = text::tokenize(binding(r, "corrective_action"), true);
  std::vector<std::string> both = rc;
  both.insert(both.end(), ca.begin(), ca.end());

  const int depth = std::min(5, static_cast<int>(rc_content.size()) / 3);
  const int causal = rc.empty() ? 0 : std::min(5, 1 + 2 * count_in(rc, kCausal));
  const int specificity =
      std::min(5, static_cast<int>(ca_content.size()) / 3 + (has_digit(ca) ? 1 : 0));
  const int evidence = std::min(5, count_in(both, kEvidence) + (has_digit(both) ? 1 : 0));
  return {{"root_cause_depth", depth},
          {"causal_chain_validity", causal},
          {"corrective_action_specificity", specificity},
          {"evidence_support", evidence}};
}

json five_whys(const LlmRequest& r) {
  struct Layer {
    const char* why;
    const char* because[3];
  };
  static const Layer kLayers[] = {
      {"Why was {p} observed?",
       {"The affected step ran outside its validated process window.",
        "The defect escaped the in-process inspection at the station.",
        "Incoming parts already carried a latent nonconformity."}},
      {"Why did that happen?",
       {"Key process parameters were not monitored in real time.",
        "The inspection method could not resolve the defect size.",
        "The supplier's outgoing check did not cover the characteristic."}},
      {"Why was the gap not caught?",
       {"The control plan did not list the characteristic as critical.",
        "Measurement system analysis had not been repeated after the last change.",
        "Change notifications from the sub-tier supplier were not reviewed."}},
      {"Why was the control plan incomplete?",
       {"The PFMEA rated the risk low based on incomplete field history.",
        "The process change bypassed the formal change management review.",
        "Ownership of the PFMEA update was not assigned."}},
      {"Why was the history not used?",
       {"Past audit findings were not fed back into PFMEA reviews.",
        "Lessons learned were stored in free text and could not be searched.",
        "No periodic cross-supplier commonality review was in place."}},
  };
  std::string pattern = canonicalize(binding(r, "failure_pattern"));
  if (pattern.empty() || pattern == "unclassified") pattern = "the failure";
  const std::size_t depth = parse_size(binding(r, "depth"), 5);
  const std::uint64_t seed = fnv1a64(pattern);
  json chain = json::array();
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& layer = kLayers[i % 5];
    std::string why = layer.why;
    if (auto pos = why.find("{p}"); pos != std::string::npos) why.replace(pos, 3, pattern);
    const auto variant = static_cast<std::size_t>((seed >> (i * 7 % 60)) % 3);
    chain.push_back({{"why", why}, {"because", layer.because[variant]}});
  }
  return {{"chain", chain}};
}

json eight_d_section(const LlmRequest& r) {
  static const std::map<std::string, std::string> kText = {
      {"D0", "Containment need confirmed; the 8D is opened because the issue recurs across audits."},
      {"D1", "Supplier quality engineer (lead), process engineer, quality auditor and the supplier's quality "
             "manager."},
      {"D3", "Quarantine suspect stock at the supplier and in transit, and apply 100% inspection of the affected "
             "characteristic until corrective actions are verified."},
      {"D6", "Verify effectiveness over three consecutive production lots with no recurrence, backed by "
             "inspection data."},
      {"D7", "Update the PFMEA and control plan, add the failure pattern to the audit checklist, and share the "
             "lesson across suppliers."},
      {"D8", "Recognize the cross-functional team and close the 8D after effectiveness is confirmed."}};
  const auto section = binding(r, "section");
  auto it = kText.find(section);
  std::string content = it != kText.end() ? it->second : std::string("See record details.");
  return {{"content", content}};
}

// Pulls "S1" out of "... for supplier S1 ..." keeping the original case.
std::optional<std::string> supplier_in(const std::string& request) {
  std::vector<std::string> words;
  std::string w;
  for (char c : request + " ") {
    if (c == ' ' || c == '\t' || c == '\n') {
      if (!w.empty()) words.push_back(w);
      w.clear();
    } else {
      w.push_back(c);
    }
  }
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    std::string lower = words[i];
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "supplier") {
      std::string id = words[i + 1];
      while (!id.empty() && std::ispunct(static_cast<unsigned char>(id.back()))) id.pop_back();
      if (!id.empty()) return id;
    }
  }
  return std::nullopt;
}

json final_from_observation(const std::string& intent, const json& obs, const std::string& request) {
  if (obs.contains("error")) {
    return "Unable to complete the request: " + obs["error"].get<std::string>();
  }
  if (obs.contains("rows")) {
    std::string text = "Commonality by " + obs.value("group_by", std::string("tag")) + " over " +
                       std::to_string(obs.value("total", 0)) + " occurrences:";
    if (obs["rows"].empty()) return text + " no matching records.";
    for (const auto& row : obs["rows"]) {
      text += "\n- " + row["key"].get<std::string>() + ": " + std::to_string(row["count"].get<long long>()) +
              " (cumulative " + percent(row["cumulative_share"].get<double>()) + ")";
    }
    return text;
  }
  if (obs.contains("series")) {
    std::string text = "Monthly trend:";
    if (obs["series"].empty()) return text + " no matching records.";
    for (const auto& b : obs["series"]) {
      text += "\n- " + b["month"].get<std::string>() + ": " + std::to_string(b["count"].get<long long>());
    }
    return text;
  }
  if (obs.contains("chain")) {
    std::string text = "5 Whys for " + obs.value("record_id", std::string("record")) + ":";
    int i = 1;
    for (const auto& p : obs["chain"]) {
      text += "\n" + std::to_string(i++) + ". " + p["why"].get<std::string>() + " " + p["because"].get<std::string>();
    }
    return text;
  }
  if (obs.contains("markdown")) return obs["markdown"].get<std::string>();
  if (obs.contains("hits")) {
    if (obs["hits"].empty()) return "No matching records found for: " + request;
    std::string text = intent == "retrieval" ? "Similar records:" : "Related records:";
    for (const auto& h : obs["hits"]) {
      text += "\n- " + h["record_id"].get<std::string>() + ": " + h.value("tuned_description", std::string());
    }
    return text;
  }
  return "Done.";
}

json agent_step(const LlmRequest& r) {
  const std::string request = binding(r, "request");
  const std::string intent = binding(r, "intent");
  json transcript = json::parse(binding(r, "transcript"), nullptr, false);
  if (!transcript.is_array()) transcript = json::array();
  const std::size_t n = transcript.size();

  json last = json::object();
  if (n > 0) {
    const auto& obs = transcript.back().value("observation", std::string());
    last = json::parse(obs, nullptr, false);
    if (last.is_discarded() || !last.is_object()) last = json{{"error", obs}};
  }

  json filters = json::object();
  if (auto s = supplier_in(request)) filters["supplier"] = *s;

  const auto search = [&] {
    return json{{"thought", "Retrieve records related to the request."},
                {"action", "search_knowledge"},
                {"arguments", {{"query", request}, {"mode", "hybrid"}, {"k", 5}, {"filters", filters}}}};
  };
  const auto finish = [&] {
    return json{{"thought", "I have enough information to answer."},
                {"final", final_from_observation(intent, last, request)}};
  };
  const auto top_ids = [&](std::size_t limit) {
    json ids = json::array();
    if (last.contains("hits")) {
      for (const auto& h : last["hits"]) {
        if (ids.size() >= limit) break;
        ids.push_back(h["record_id"]);
      }
    }
    return ids;
  };

  if (intent == "commonality") {
    if (n == 0) {
      const auto lowered = text::tokenize(request);
      const bool trend = std::any_of(lowered.begin(), lowered.end(), [](const std::string& t) {
        return t.rfind("trend", 0) == 0;
      });
      if (trend) {
        return json{{"thought", "Track counts over time."}, {"action", "trend_series"}, {"arguments", {{"filters", filters}}}};
      }
      return json{{"thought", "Count findings per tag to locate shared failure modes."},
                  {"action", "commonality_stats"},
                  {"arguments", {{"group_by", "tag"}, {"filters", filters}}}};
    }
    return finish();
  }
  if (intent == "failure_analysis") {
    if (n == 0) return search();
    if (n == 1 && !top_ids(1).empty()) {
      return json{{"thought", "Run a 5 Whys analysis on the closest record."},
                  {"action", "five_whys"},
                  {"arguments", {{"record_id", top_ids(1)[0]}, {"depth", 5}}}};
    }
    return finish();
  }
  if (intent == "report_generation") {
    if (n == 0) return search();
    if (n == 1 && !top_ids(3).empty()) {
      return json{{"thought", "Draft an 8D report from the most relevant records."},
                  {"action", "eight_d_report"},
                  {"arguments", {{"record_ids", top_ids(3)}}}};
    }
    return finish();
  }
  if (n == 0) return search();
  return finish();
}

}  // namespace

std::string keyword_intent(std::string_view request) {
  const auto tokens = text::tokenize(request);
  const auto has = [&](std::string_view word) {
    return std::find(tokens.begin(), tokens.end(), word) != tokens.end();
  };
  const auto has_prefix = [&](std::string_view prefix) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return t.rfind(prefix, 0) == 0; });
  };
  const auto has_phrase = [&](std::string_view a, std::string_view b) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (tokens[i] == a && tokens[i + 1] == b) return true;
    }
    return false;
  };
  if (has("why") || has_phrase("root", "cause")) return "failure_analysis";
  if (has("8d") || has_prefix("report")) return "report_generation";
  if (has_prefix("common") || has("top") || has_prefix("trend") || has_phrase("most", "frequent")) {
    return "commonality";
  }
  return "retrieval";
}

std::string fallback_response(const LlmRequest& request) {
  const auto& id = request.template_id;
  json reply;
  if (id == templates::tune_description) {
    reply = {{"description", canonicalize(binding(request, "text"))}};
  } else if (id == templates::extract_pattern) {
    reply = {{"failure_pattern", extract_pattern(request)}};
  } else if (id == templates::assign_tags) {
    reply = {{"tags", assign_tags(request)}};
  } else if (id == templates::cod_summarize) {
    reply = {{"summary", cod_round(request)}};
  } else if (id == templates::quality_judge) {
    reply = quality_judge(request);
  } else if (id == templates::intent_classify) {
    reply = {{"intent", keyword_intent(binding(request, "request"))}};
  } else if (id == templates::agent_step) {
    reply = agent_step(request);
  } else if (id == templates::five_whys) {
    reply = five_whys(request);
  } else if (id == templates::eight_d_section) {
    reply = eight_d_section(request);
  } else {
    throw GatewayError(GatewayError::Kind::unknown_template, "no fallback for template: " + id);
  }
  return reply.dump();
}

}  // namespace smartaudit::llm
