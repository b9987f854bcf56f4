// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "../support.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/fixtures.hpp"
#include "smartaudit/json_io.hpp"

using namespace smartaudit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

copilot::RawFinding finding(const std::string& text, const std::string& supplier = "S1") {
  copilot::RawFinding f;
  f.supplier_id = supplier;
  f.free_text = text;
  f.submitted_at = parse_timestamp("2025-01-15T09:00:00Z");
  f.root_cause = "Stencil aperture worn after 40k prints.";
  f.corrective_action = "Replace stencil and add aperture check to PM.";
  return f;
}

void seed(const fs::path& dir, int issues = 120, int audits = 200) {
  fixtures::FixtureOptions o;
  o.issues = issues;
  o.audits = audits;
  fixtures::write(fixtures::generate(o), dir);
}

}  // namespace

TEST(Engine, FreshDirectoryIsEmpty) {
  support::TempDir dir;
  auto e = support::open_engine(dir.path());
  EXPECT_EQ(e->knowledge()->size(), 0u);
  EXPECT_TRUE(e->plan(Checklist{}).empty());
  EXPECT_TRUE(e->search("solder", copilot::SearchMode::hybrid, 10).empty());
}

TEST(Engine, SubmitStoresDeduplicatesAndPersists) {
  support::TempDir dir;
  std::string id;
  {
    auto e = support::open_engine(dir.path());
    const auto r = e->submit_finding(finding("material lot mixed at equipment station"));
    ASSERT_EQ(r.status, FindingStatus::stored);
    id = r.record->id;
    EXPECT_EQ(r.record->tags, (std::vector<std::string>{"equipment", "material"}));
    EXPECT_EQ(r.record->summary_rounds.size(), 3u);
    const auto again = e->submit_finding(finding("material lot mixed at equipment station"));
    EXPECT_EQ(again.status, FindingStatus::duplicate);
    EXPECT_EQ(again.duplicate_of, id);
    EXPECT_EQ(e->knowledge()->size(), 1u);
  }
  auto reopened = support::open_engine(dir.path());
  EXPECT_TRUE(reopened->knowledge()->contains(id));
}

TEST(Engine, EmptyTextThrowsAndBadTagQuarantines) {
  support::TempDir dir;
  auto scripted = std::make_shared<llm::ScriptedBackend>();
  auto e = support::open_engine(dir.path(), scripted);
  EXPECT_THROW(e->submit_finding(finding("  ")), ValidationError);
  scripted->enqueue("assign_tags", R"({"tags":["gremlins"]})");
  const auto q = e->submit_finding(finding("odd noise"));
  ASSERT_EQ(q.status, FindingStatus::quarantined);
  EXPECT_FALSE(q.gateway_failure);
  EXPECT_NE(q.quarantine->reason.find("unknown tag"), std::string::npos);
  EXPECT_EQ(q.quarantine->id, "q-000001");
  EXPECT_EQ(e->knowledge()->size(), 0u);
}

TEST(Engine, GatewayFailureIsFlagged) {
  support::TempDir dir;
  auto scripted = std::make_shared<llm::ScriptedBackend>();
  scripted->enqueue("tune_description", "no json");
  scripted->enqueue("tune_description", "still none");
  auto e = support::open_engine(dir.path(), scripted);
  const auto q = e->submit_finding(finding("crack in housing"));
  EXPECT_EQ(q.status, FindingStatus::quarantined);
  EXPECT_TRUE(q.gateway_failure);
}

TEST(Engine, IngestFileCountsAndQuarantinesBadLines) {
  support::TempDir dir;
  auto e = support::open_engine(dir.path());
  support::write_text(dir / "empty.jsonl", "");
  EXPECT_EQ(e->ingest_file(dir / "empty.jsonl").line(), "ingested 0, duplicates 0, quarantined 0");
  const std::string a = json(finding("crack in housing")).dump();
  const std::string b = json(finding("label misprint on carton", "S2")).dump();
  support::write_text(dir / "in.jsonl", a + "\n" + b + "\n{not json\n" + a + "\n");
  const auto s = e->ingest_file(dir / "in.jsonl");
  EXPECT_EQ(s.line(), "ingested 2, duplicates 1, quarantined 1");
  EXPECT_EQ(e->knowledge()->size(), 2u);
}

TEST(Engine, PlanUsesHistoryAndValidates) {
  support::TempDir dir;
  seed(dir.path());
  auto e = support::open_engine(dir.path());
  const auto cl = decode<Checklist>(json::parse(support::slurp(dir / "checklist.json")), "checklist");
  const auto plan = e->plan(cl);
  ASSERT_EQ(plan.size(), 20u);
  EXPECT_EQ(std::count_if(plan.begin(), plan.end(), [](const auto& a) { return a.critical; }), 5);
  EXPECT_EQ(e->plan(cl, 3).size(), 20u);
  auto bad = cl;
  bad.items[0].severity = 11;
  EXPECT_THROW(e->plan(bad), FactorOutOfRange);
  bad = cl;
  bad.items[1].id = bad.items[0].id;
  EXPECT_THROW(e->plan(bad), ValidationError);
}

TEST(Engine, EvaluateAppendsScoredVersion) {
  support::TempDir dir;
  auto scripted = std::make_shared<llm::ScriptedBackend>();
  std::string id;
  {
    auto e = support::open_engine(dir.path(), scripted);
    id = e->submit_finding(finding("crack in housing")).record->id;
    scripted->enqueue("quality_judge",
                      R"({"root_cause_depth":4,"causal_chain_validity":3,"corrective_action_specificity":5,"evidence_support":2})");
    EXPECT_EQ(e->evaluate(id).overall, 70);
    EXPECT_EQ(e->scorecard("S1").mean_overall, 70.0);
    EXPECT_THROW(e->evaluate("kr-unknown"), NotFoundError);
  }
  auto reopened = support::open_engine(dir.path());
  EXPECT_EQ(reopened->knowledge()->record(id).quality->overall, 70);
  EXPECT_EQ(reopened->knowledge()->size(), 1u);
}

TEST(Engine, ScorecardKnownAndUnknownSuppliers) {
  support::TempDir dir;
  seed(dir.path());
  auto e = support::open_engine(dir.path());
  EXPECT_EQ(e->scorecard("S3").count, 0u);  // appears in history only
  EXPECT_THROW(e->scorecard("S99"), NotFoundError);
}

TEST(Engine, SnapshotAndReplayAgree) {
  support::TempDir dir;
  seed(dir.path());
  {
    auto e = support::open_engine(dir.path());
    const auto data = fixtures::generate({});
    for (std::size_t i = 0; i < 20; ++i) e->submit_finding(data.findings[i]);
    const auto info = e->snapshot();
    EXPECT_EQ(info.sequence, 1u);
    for (std::size_t i = 20; i < 30; ++i) e->submit_finding(data.findings[i]);
  }
  auto snap = support::open_engine(dir.path(), {}, store::LoadMode::prefer_snapshot);
  auto full = support::open_engine(dir.path(), {}, store::LoadMode::full_replay);
  EXPECT_EQ(snap->snapshot_used(), 1u);
  EXPECT_FALSE(full->snapshot_used());
  EXPECT_EQ(snap->state_json().dump(), full->state_json().dump());
  for (const char* q : {"solder bridge", "seal leak", "torque", "calibration overdue", "station 4"}) {
    EXPECT_EQ(json(snap->search(q, copilot::SearchMode::hybrid, 10)).dump(),
              json(full->search(q, copilot::SearchMode::hybrid, 10)).dump());
  }
}

TEST(Engine, AgentSessionsAreSavedWithSequentialIds) {
  support::TempDir dir;
  seed(dir.path());
  {
    auto e = support::open_engine(dir.path());
    const auto data = fixtures::generate({});
    for (std::size_t i = 0; i < 10; ++i) e->submit_finding(data.findings[i]);
    const auto s = e->run_agent("top failure tags across suppliers");
    EXPECT_EQ(s.session_id, "s-000001");
    EXPECT_EQ(s.status, agent::SessionStatus::done);
    EXPECT_EQ(e->session("s-000001"), s);
    agent::SessionOptions child;
    child.parent_session_id = "s-000001";
    EXPECT_EQ(e->run_agent("draft an 8D report", child).parent_session_id, "s-000001");
    child.parent_session_id = "s-999999";
    EXPECT_THROW(e->run_agent("again", child), NotFoundError);
    EXPECT_THROW(e->run_agent("   "), ValidationError);
  }
  auto reopened = support::open_engine(dir.path());
  EXPECT_EQ(reopened->run_agent("find similar solder issues").session_id, "s-000003");
}
