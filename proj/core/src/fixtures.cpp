// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/fixtures.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"
#include "smartaudit/text_index.hpp"

namespace smartaudit::fixtures {

using nlohmann::json;

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("Rng::below(0)");
  // Reject the incomplete top bucket so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

int Rng::between(int lo, int hi) {
  return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

const std::vector<std::string>& phrase_pool() {
  static const std::vector<std::string> kPhrases = {
      "solder bridge",  "cold joint",        "missing component", "wrong part",        "label misprint",
      "dimensional deviation", "seal leak",  "torque drift",      "documentation gap", "flux residue",
      "bent pin",       "oxidized lead",     "sharp burr",        "paint blister",     "weld porosity",
      "thread stripping", "gasket tear",     "moisture ingress",  "esd damage",        "calibration overdue",
      "fixture wear",   "nozzle clog",       "reflow profile",    "stencil smear",     "conformal coating",
      "cable chafe",    "rivet loose",       "plating peel",      "glue overflow",     "foam shrink",
      "polarity reversed", "barcode unreadable", "firmware mismatch", "hipot failure", "vibration fatigue",
      "oven temperature", "operator training", "packaging dent",  "shelf expiry",      "crimp height"};
  return kPhrases;
}

namespace {

const std::vector<std::string> kCategories = {"process", "material", "equipment", "method", "measurement",
                                              "environment"};

const std::vector<std::string> kRootCauses = {
    "Reflow oven zone 3 drifted because the thermocouple was not recalibrated after maintenance.",
    "Operator skipped the first article inspection due to missing work instruction.",
    "Incoming lot was not inspected since the supplier certificate was accepted without verification.",
    "Fixture locating pins were worn, causing misplacement during assembly.",
    "Storage humidity exceeded the limit, resulting in moisture uptake.",
    "Unknown."};

const std::vector<std::string> kActions = {
    "Recalibrate thermocouples monthly and add SPC monitoring on zone temperatures; verified on 3 lots.",
    "Update the work instruction, retrain operators and add a first article checklist sign-off.",
    "Introduce incoming sampling inspection with measured data for the next 5 lots.",
    "Replace locating pins and add them to the preventive maintenance plan with a 10k cycle limit.",
    "Install humidity logging with alarm and bake parts before use.",
    "Will monitor."};

std::string category_of(std::size_t phrase_index) { return kCategories[phrase_index % kCategories.size()]; }

std::string supplier_name(int i) { return "S" + std::to_string(i + 1); }

std::string padded(const char* prefix, int n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, n);
  return buf;
}

std::set<std::string> content_tokens(const std::string& text) {
  const auto t = text::tokenize(text, true);
  return {t.begin(), t.end()};
}

bool shares_two_tokens(const std::set<std::string>& item, const std::vector<std::set<std::string>>& failed) {
  for (const auto& issue : failed) {
    int shared = 0;
    for (const auto& tok : item) shared += issue.count(tok) ? 1 : 0;
    if (shared >= 2) return true;
  }
  return false;
}

}  // namespace

SyntheticData generate(const FixtureOptions& o) {
  if (o.suppliers < 1 || o.issues < 0 || o.audits < 0 || o.checklist_items < 0 || o.findings < 0) {
    throw InvalidArgument("fixture counts must be non-negative and suppliers >= 1");
  }
  Rng rng(o.seed);
  const auto& pool = phrase_pool();
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::vector<std::size_t> hot(order.begin(), order.begin() + 8);
  const std::vector<std::size_t> cold(order.begin() + 8, order.end());

  SyntheticData data;
  for (auto i : hot) data.hot_phrases.push_back(pool[i]);

  const auto pick_two = [&](const std::vector<std::size_t>& from) {
    const auto a = from[rng.below(from.size())];
    auto b = a;
    while (b == a) b = from[rng.below(from.size())];
    return std::make_pair(a, b);
  };

  const Date history_start{2023, 1, 1};
  std::vector<std::set<std::string>> failed_tokens;
  for (int i = 0; i < o.issues; ++i) {
    const bool is_hot = rng.chance(0.3);
    const auto [a, b] = pick_two(is_hot ? hot : cold);
    HistoricalIssue issue;
    issue.id = padded("H-", i + 1, 4);
    issue.supplier_id = supplier_name(static_cast<int>(rng.below(static_cast<std::uint64_t>(o.suppliers))));
    issue.item_category = category_of(a);
    issue.description = pool[a] + " and " + pool[b];
    issue.failure_pattern = pool[a];
    std::set<std::string> tags{category_of(a), category_of(b)};
    issue.tags.assign(tags.begin(), tags.end());
    issue.severity = rng.between(3, 9);
    issue.occurred_on = Date::from_days(history_start.days_since_epoch() + static_cast<std::int64_t>(rng.below(731)));
    issue.failed = is_hot && rng.chance(0.8);
    if (issue.failed) failed_tokens.push_back(content_tokens(issue.description));
    data.history.push_back(std::move(issue));
  }

  const auto make_item = [&](const std::string& id, bool want_hot) {
    const auto& from = want_hot ? hot : cold;
    const auto p = from[rng.below(from.size())];
    ChecklistItem item;
    item.id = id;
    item.text = "verify " + pool[p];
    item.category = category_of(p);
    item.severity = rng.between(3, 9);
    item.detection = rng.between(3, 9);
    item.base_sample_size = rng.between(2, 20);
    return item;
  };

  const Date audit_start{2025, 1, 1};
  for (int i = 0; i < o.audits; ++i) {
    AuditObservation obs;
    obs.supplier_id = supplier_name(static_cast<int>(rng.below(static_cast<std::uint64_t>(o.suppliers))));
    obs.item = make_item(padded("A-", i + 1, 5), rng.chance(0.5));
    obs.audited_on = Date::from_days(audit_start.days_since_epoch() + static_cast<std::int64_t>(rng.below(180)));
    const bool planted = shares_two_tokens(content_tokens(obs.item.text), failed_tokens);
    obs.failed = rng.chance(planted ? 0.9 : 0.1);
    data.audits.push_back(std::move(obs));
  }

  data.checklist.id = "CL-" + std::to_string(o.seed);
  data.checklist.supplier_id = supplier_name(0);
  for (int i = 0; i < o.checklist_items; ++i) {
    data.checklist.items.push_back(make_item(padded("CI-", i + 1, 2), rng.chance(0.5)));
  }

  for (int i = 0; i < o.findings; ++i) {
    // The last finding repeats an earlier one verbatim.
    if (i == o.findings - 1 && i >= 1) {
      data.findings.push_back(data.findings[static_cast<std::size_t>(i) / 2]);
      break;
    }
    const auto p = rng.below(pool.size());
    const auto extra = kCategories[rng.below(kCategories.size())];
    copilot::RawFinding f;
    f.supplier_id = supplier_name(static_cast<int>(rng.below(static_cast<std::uint64_t>(o.suppliers))));
    f.item_id = padded("CI-", rng.between(1, std::max(1, o.checklist_items)), 2);
    f.free_text = "  Found " + pool[p] + " on unit " + std::to_string(rng.between(100, 999)) + " at station " +
                  std::to_string(rng.between(1, 12)) + ";  " + category_of(p) + " and " + extra +
                  " involved, lot L" + std::to_string(rng.between(1000, 9999)) + " on hold. ";
    const auto rc = rng.below(kRootCauses.size());
    f.root_cause = kRootCauses[rc];
    f.corrective_action = kActions[rc];
    const Date d = Date::from_days(audit_start.days_since_epoch() + static_cast<std::int64_t>(rng.below(365)));
    f.submitted_at = parse_timestamp(d.to_string() + "T08:00:00Z");
    data.findings.push_back(std::move(f));
  }
  return data;
}

void write(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write_lines = [&](const char* name, const auto& items) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + (dir / name).string());
    for (const auto& item : items) out << json(item).dump() << "\n";
  };
  write_lines("history.jsonl", data.history);
  write_lines("audits.jsonl", data.audits);
  write_lines("findings.jsonl", data.findings);
  write_lines("checklists.jsonl", std::vector<Checklist>{data.checklist});
  std::ofstream cl(dir / "checklist.json", std::ios::binary | std::ios::trunc);
  cl << json(data.checklist).dump(2) << "\n";
}

}  // namespace smartaudit::fixtures
