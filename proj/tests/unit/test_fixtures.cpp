// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "../support.hpp"
#include "smartaudit/fixtures.hpp"
#include "smartaudit/json_io.hpp"
#include "smartaudit/store.hpp"
#include "smartaudit/text_index.hpp"

using namespace smartaudit;
namespace fs = std::filesystem;
using nlohmann::json;

TEST(Fixtures, SameSeedSameFiles) {
  support::TempDir a, b;
  fixtures::write(fixtures::generate({}), a.path());
  fixtures::write(fixtures::generate({}), b.path());
  for (const char* f : {"history.jsonl", "audits.jsonl", "checklist.json", "checklists.jsonl", "findings.jsonl"}) {
    EXPECT_EQ(support::slurp(a / f), support::slurp(b / f)) << f;
  }
  fixtures::FixtureOptions other;
  other.seed = 43;
  support::TempDir c;
  fixtures::write(fixtures::generate(other), c.path());
  EXPECT_NE(support::slurp(a / "history.jsonl"), support::slurp(c / "history.jsonl"));
}

TEST(Fixtures, ZeroIssuesGivesEmptyHistory) {
  fixtures::FixtureOptions o;
  o.issues = 0;
  support::TempDir d;
  fixtures::write(fixtures::generate(o), d.path());
  EXPECT_TRUE(fs::exists(d / "history.jsonl"));
  EXPECT_EQ(support::slurp(d / "history.jsonl"), "");
}

TEST(Fixtures, PhrasePoolTokensAreDisjoint) {
  std::set<std::string> seen;
  for (const auto& p : fixtures::phrase_pool()) {
    const auto toks = text::tokenize(p, true);
    EXPECT_EQ(toks.size(), 2u) << p;
    for (const auto& t : toks) EXPECT_TRUE(seen.insert(t).second) << t;
  }
}

// Recount the written files: group audits by whether their item shares two
// or more content tokens with any failed history issue.
TEST(Fixtures, PlantedGroupsHaveSeparatedBaseRates) {
  support::TempDir d;
  fixtures::write(fixtures::generate({}), d.path());
  std::vector<std::set<std::string>> failed;
  for (const auto& line : store::read_jsonl(d / "history.jsonl").lines) {
    const auto issue = line.value.get<HistoricalIssue>();
    if (!issue.failed) continue;
    const auto t = text::tokenize(issue.description, true);
    failed.emplace_back(t.begin(), t.end());
  }
  ASSERT_FALSE(failed.empty());
  int planted = 0, planted_fail = 0, other = 0, other_fail = 0;
  std::set<std::string> suppliers;
  for (const auto& line : store::read_jsonl(d / "audits.jsonl").lines) {
    const auto obs = line.value.get<AuditObservation>();
    suppliers.insert(obs.supplier_id);
    const auto t = text::tokenize(obs.item.text, true);
    const std::set<std::string> toks(t.begin(), t.end());
    bool hit = false;
    for (const auto& f : failed) {
      int shared = 0;
      for (const auto& x : toks) shared += f.count(x) ? 1 : 0;
      hit = hit || shared >= 2;
    }
    (hit ? planted : other)++;
    if (obs.failed) (hit ? planted_fail : other_fail)++;
  }
  ASSERT_GT(planted, 50);
  ASSERT_GT(other, 50);
  const double rp = static_cast<double>(planted_fail) / planted, ro = static_cast<double>(other_fail) / other;
  for (double r : {rp, ro}) {
    EXPECT_GE(r, 0.05);
    EXPECT_LE(r, 0.95);
  }
  EXPECT_NEAR(rp, 0.9, 0.05);
  EXPECT_NEAR(ro, 0.1, 0.05);
  EXPECT_EQ(suppliers.size(), 5u);
}

TEST(Fixtures, FindingsParseAndContainOneDuplicate) {
  const auto data = fixtures::generate({});
  ASSERT_EQ(data.findings.size(), 50u);
  std::set<std::string> texts;
  for (const auto& f : data.findings) texts.insert(json(f).dump());
  EXPECT_EQ(texts.size(), 49u);
  EXPECT_EQ(data.checklist.items.size(), 20u);
}
