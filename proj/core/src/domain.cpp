// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/domain.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>

#include "smartaudit/errors.hpp"
#include "smartaudit/hashing.hpp"

namespace smartaudit {

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error([&] {
        std::string msg;
        for (const auto& p : problems) {
          if (!msg.empty()) msg += "; ";
          msg += p;
        }
        return msg.empty() ? std::string("validation failed") : msg;
      }()),
      problems_(std::move(problems)) {}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string two(int v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

bool is_valid_date(int year, int month, int day) noexcept {
  if (year < 1 || year > 9999) return false;
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  return month >= 1 && month <= 12 && day >= 1 && ymd.ok();
}

std::optional<Date> Date::try_parse(std::string_view iso) noexcept {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  Date d;
  if (!parse_int(iso.substr(0, 4), d.year) || !parse_int(iso.substr(5, 2), d.month) ||
      !parse_int(iso.substr(8, 2), d.day)) {
    return std::nullopt;
  }
  if (!is_valid_date(d.year, d.month, d.day)) return std::nullopt;
  return d;
}

Date Date::parse(std::string_view iso) {
  auto d = try_parse(iso);
  if (!d) throw InvalidArgument("bad date: '" + std::string(iso) + "' (expected YYYY-MM-DD)");
  return *d;
}

Date Date::from_days(std::int64_t days_since_epoch) noexcept {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_since_epoch}}};
  return Date{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
              static_cast<int>(static_cast<unsigned>(ymd.day()))};
}

std::int64_t Date::days_since_epoch() const noexcept {
  const std::chrono::sys_days sd{std::chrono::year{year} / std::chrono::month{static_cast<unsigned>(month)} /
                                 std::chrono::day{static_cast<unsigned>(day)}};
  return sd.time_since_epoch().count();
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::string Date::month_key() const { return to_string().substr(0, 7); }

Date date_of(Timestamp ts) noexcept {
  return Date::from_days(std::chrono::floor<std::chrono::days>(ts).time_since_epoch().count());
}

std::string format_timestamp(Timestamp ts) {
  const auto day = std::chrono::floor<std::chrono::days>(ts);
  const std::int64_t secs = (ts - day).count();
  return Date::from_days(day.time_since_epoch().count()).to_string() + "T" + two(static_cast<int>(secs / 3600)) +
         ":" + two(static_cast<int>(secs / 60 % 60)) + ":" + two(static_cast<int>(secs % 60)) + "Z";
}

Timestamp parse_timestamp(std::string_view iso) {
  const auto fail = [&] {
    return InvalidArgument("bad timestamp: '" + std::string(iso) + "' (expected YYYY-MM-DDTHH:MM:SSZ)");
  };
  if (iso.size() < 10) throw fail();
  auto date = Date::try_parse(iso.substr(0, 10));
  if (!date) throw fail();
  Timestamp ts{std::chrono::seconds{date->days_since_epoch() * 86400}};
  if (iso.size() == 10) return ts;
  if (iso.size() != 20 || (iso[10] != 'T' && iso[10] != ' ') || iso[13] != ':' || iso[16] != ':' ||
      iso[19] != 'Z') {
    throw fail();
  }
  int h = 0, m = 0, s = 0;
  if (!parse_int(iso.substr(11, 2), h) || !parse_int(iso.substr(14, 2), m) || !parse_int(iso.substr(17, 2), s) ||
      h > 23 || m > 59 || s > 60) {
    throw fail();
  }
  return ts + std::chrono::seconds{h * 3600 + m * 60 + s};
}

Taxonomy::Taxonomy(std::vector<std::string> categories, std::vector<std::string> failure_patterns)
    : categories_(std::move(categories)), failure_patterns_(std::move(failure_patterns)) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& key : categories_) {
    if (key.empty()) {
      problems.emplace_back("empty category key");
      continue;
    }
    if (std::any_of(key.begin(), key.end(), [](unsigned char c) { return c >= 'A' && c <= 'Z'; })) {
      problems.push_back("category key not lowercase: " + key);
    }
    if (!seen.insert(key).second) problems.push_back("duplicate category key: " + key);
  }
  std::set<std::string> patterns;
  for (const auto& p : failure_patterns_) {
    if (p.empty()) problems.emplace_back("empty failure pattern");
    if (!patterns.insert(p).second) problems.push_back("duplicate failure pattern: " + p);
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

Taxonomy Taxonomy::default_6m() {
  return Taxonomy({"process", "material", "equipment", "method", "measurement", "environment"},
                  {"solder bridge", "cold joint", "missing component", "wrong part", "misalignment",
                   "contamination", "crack", "scratch", "corrosion", "label misprint", "dimensional deviation",
                   "seal leak", "torque drift", "documentation gap"});
}

bool Taxonomy::has_category(std::string_view key) const noexcept {
  return std::find(categories_.begin(), categories_.end(), key) != categories_.end();
}

QualityScore QualityScore::from_dimensions(int root_cause_depth, int causal_chain_validity,
                                           int corrective_action_specificity, int evidence_support) {
  QualityScore q{root_cause_depth, causal_chain_validity, corrective_action_specificity, evidence_support, 0};
  std::vector<std::string> problems;
  const auto check = [&](int v, const char* name) {
    if (v < 0 || v > 5) problems.push_back(std::string("quality.") + name + " out of range: " + std::to_string(v));
  };
  check(q.root_cause_depth, "root_cause_depth");
  check(q.causal_chain_validity, "causal_chain_validity");
  check(q.corrective_action_specificity, "corrective_action_specificity");
  check(q.evidence_support, "evidence_support");
  if (!problems.empty()) throw ValidationError(std::move(problems));
  q.overall = 5 * q.dimension_sum();
  return q;
}

std::string canonicalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  std::string normalized;
  if (U_SUCCESS(status)) {
    const icu::UnicodeString src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(),
                                                                                 static_cast<int32_t>(text.size())));
    icu::UnicodeString dst = nfc->normalize(src, status);
    if (U_SUCCESS(status)) dst.toUTF8String(normalized);
  }
  if (U_FAILURE(status)) normalized.assign(text);

  std::string out;
  out.reserve(normalized.size());
  bool pending_space = false;
  for (unsigned char c : normalized) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (ws) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> tags) {
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

}  // namespace

std::string content_hash(const KnowledgeRecord& record) {
  constexpr char kSep = '\x1f';
  std::string buf;
  const auto field = [&](std::string_view name, std::string_view value) {
    buf.append(name);
    buf.push_back('=');
    buf.append(value);
    buf.push_back(kSep);
  };
  field("tuned_description", canonicalize(record.tuned_description));
  field("failure_pattern", canonicalize(record.failure_pattern));
  std::string tags;
  for (const auto& t : sorted_unique(record.tags)) {
    if (!tags.empty()) tags.push_back(',');
    tags += t;
  }
  field("tags", tags);
  field("root_cause", canonicalize(record.root_cause));
  field("corrective_action", canonicalize(record.corrective_action));
  return sha256_hex(buf);
}

std::vector<std::string> record_problems(const KnowledgeRecord& record, const Taxonomy& taxonomy) {
  std::vector<std::string> problems;
  if (canonicalize(record.tuned_description).empty()) problems.emplace_back("empty tuned_description");
  for (const auto& tag : sorted_unique(record.tags)) {
    if (!taxonomy.has_category(tag)) problems.push_back("unknown tag: " + tag);
  }
  if (record.quality) {
    const auto& q = *record.quality;
    const auto check = [&](int v, const char* name) {
      if (v < 0 || v > 5) problems.push_back(std::string("quality.") + name + " out of range: " + std::to_string(v));
    };
    check(q.root_cause_depth, "root_cause_depth");
    check(q.causal_chain_validity, "causal_chain_validity");
    check(q.corrective_action_specificity, "corrective_action_specificity");
    check(q.evidence_support, "evidence_support");
  }
  return problems;
}

KnowledgeRecord validate_record(KnowledgeRecord record, const Taxonomy& taxonomy) {
  auto problems = record_problems(record, taxonomy);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  record.tuned_description = canonicalize(record.tuned_description);
  record.failure_pattern = canonicalize(record.failure_pattern);
  record.root_cause = canonicalize(record.root_cause);
  record.corrective_action = canonicalize(record.corrective_action);
  record.supplier_id = canonicalize(record.supplier_id);
  record.tags = sorted_unique(std::move(record.tags));
  if (record.quality) {
    record.quality->overall = 5 * record.quality->dimension_sum();
  }
  record.content_hash = content_hash(record);
  if (record.id.empty()) record.id = "kr-" + record.content_hash.substr(0, 16);
  return record;
}

std::vector<std::string> checklist_problems(const Checklist& checklist) {
  std::vector<std::string> problems;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < checklist.items.size(); ++i) {
    const auto& item = checklist.items[i];
    const std::string where = "items[" + std::to_string(i) + "]";
    if (item.id.empty()) problems.push_back(where + ".id empty");
    else if (!ids.insert(item.id).second) problems.push_back(where + ".id duplicate: " + item.id);
    if (canonicalize(item.text).empty()) problems.push_back(where + ".text empty");
    if (item.base_sample_size < 1) problems.push_back(where + ".base_sample_size must be >= 1");
  }
  return problems;
}

std::vector<std::string> factor_problems(const Checklist& checklist) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < checklist.items.size(); ++i) {
    const auto& item = checklist.items[i];
    const std::string where = "items[" + std::to_string(i) + "]";
    if (item.severity < 1 || item.severity > 10) {
      problems.push_back(where + ".severity out of range: " + std::to_string(item.severity));
    }
    if (item.detection < 1 || item.detection > 10) {
      problems.push_back(where + ".detection out of range: " + std::to_string(item.detection));
    }
  }
  return problems;
}

std::vector<std::string> issue_problems(const HistoricalIssue& issue, const Taxonomy& taxonomy, Date today) {
  std::vector<std::string> problems;
  if (issue.id.empty()) problems.emplace_back("issue id empty");
  if (issue.severity < 1 || issue.severity > 10) {
    problems.push_back("severity out of range: " + std::to_string(issue.severity));
  }
  if (!is_valid_date(issue.occurred_on.year, issue.occurred_on.month, issue.occurred_on.day)) {
    problems.emplace_back("occurred_on invalid");
  } else if (issue.occurred_on > today) {
    problems.push_back("occurred_on in the future: " + issue.occurred_on.to_string());
  }
  for (const auto& tag : issue.tags) {
    if (!taxonomy.has_category(tag)) problems.push_back("unknown tag: " + tag);
  }
  return problems;
}

}  // namespace smartaudit
