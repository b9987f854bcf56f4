// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "smartaudit/domain.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"

using namespace smartaudit;

namespace {

// UTF-8 decoder kept separate from ICU so the NFC check does not grade
// itself.
std::vector<char32_t> code_points(const std::string& s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

KnowledgeRecord sample_record() {
  KnowledgeRecord r;
  r.supplier_id = "S1";
  r.tuned_description = "solder bridge on U301";
  r.failure_pattern = "solder bridge";
  r.tags = {"process"};
  r.root_cause = "stencil worn";
  r.corrective_action = "replace stencil";
  r.created_at = parse_timestamp("2024-03-01T10:00:00Z");
  return r;
}

}  // namespace

TEST(Canonicalize, CollapsesWhitespace) {
  EXPECT_EQ(canonicalize("  solder   bridge "), "solder bridge");
  EXPECT_EQ(canonicalize("a\t\n b"), "a b");
}

TEST(Canonicalize, EmptyStaysEmpty) { EXPECT_EQ(canonicalize(""), ""); }

TEST(Canonicalize, ComposesToNfc) {
  const std::string decomposed = "Cafe\xCC\x81";  // e + U+0301
  ASSERT_EQ(code_points(decomposed), (std::vector<char32_t>{'C', 'a', 'f', 'e', 0x0301}));
  // Reference: U+0065 U+0301 composes to U+00E9.
  EXPECT_EQ(code_points(canonicalize(decomposed)), (std::vector<char32_t>{'C', 'a', 'f', 0x00E9}));
  EXPECT_EQ(canonicalize(decomposed), "Caf\xC3\xA9");
}

TEST(ValidateRecord, UnknownTagIsReported) {
  auto r = sample_record();
  r.tags = {"gremlins"};
  try {
    validate_record(r, Taxonomy::default_6m());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.problems().size(), 1u);
    EXPECT_EQ(e.problems()[0], "unknown tag: gremlins");
  }
}

TEST(ValidateRecord, HashIsDeterministic) {
  const auto a = validate_record(sample_record(), Taxonomy::default_6m());
  const auto b = validate_record(sample_record(), Taxonomy::default_6m());
  EXPECT_EQ(a.content_hash, b.content_hash);
  EXPECT_EQ(a.content_hash.size(), 64u);
  EXPECT_EQ(a.id, "kr-" + a.content_hash.substr(0, 16));
  auto c = sample_record();
  c.tuned_description += " again";
  EXPECT_NE(validate_record(c, Taxonomy::default_6m()).content_hash, a.content_hash);
}

TEST(QualityScore, OverallIsFiveTimesSum) {
  EXPECT_EQ(QualityScore::from_dimensions(5, 5, 5, 5).overall, 100);
  EXPECT_EQ(QualityScore::from_dimensions(0, 0, 0, 0).overall, 0);
  EXPECT_EQ(QualityScore::from_dimensions(4, 3, 5, 2).overall, 70);
  EXPECT_THROW(QualityScore::from_dimensions(6, 0, 0, 0), ValidationError);
  EXPECT_THROW(QualityScore::from_dimensions(0, -1, 0, 0), ValidationError);
}

TEST(Taxonomy, DefaultHasSixCategories) {
  const auto t = Taxonomy::default_6m();
  EXPECT_EQ(t.categories(),
            (std::vector<std::string>{"process", "material", "equipment", "method", "measurement", "environment"}));
  EXPECT_FALSE(t.has_category("gremlins"));
}

TEST(Dates, ParseFormatAndDays) {
  const auto d = Date::parse("2024-02-29");
  EXPECT_EQ(d.to_string(), "2024-02-29");
  EXPECT_EQ(d.month_key(), "2024-02");
  EXPECT_EQ(Date::from_days(d.days_since_epoch()), d);
  EXPECT_FALSE(Date::try_parse("2023-02-29"));
  EXPECT_THROW(Date::parse("yesterday"), InvalidArgument);
  EXPECT_EQ(format_timestamp(parse_timestamp("2024-03-01T10:00:00Z")), "2024-03-01T10:00:00Z");
}

TEST(Checklist, StructuralAndFactorProblemsAreSeparate) {
  Checklist c;
  c.items.push_back({"A", "verify solder", "process", 11, 5, 4});
  c.items.push_back({"A", "", "process", 5, 5, 0});
  const auto structural = checklist_problems(c);
  EXPECT_EQ(structural.size(), 3u);  // duplicate id, empty text, base size
  EXPECT_EQ(factor_problems(c).size(), 1u);
}

TEST(JsonIo, RecordRoundTrip) {
  const auto r = validate_record(sample_record(), Taxonomy::default_6m());
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("near_duplicate_of"), nullptr);
  EXPECT_EQ(j.get<KnowledgeRecord>(), r);
}
