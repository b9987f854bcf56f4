// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "smartaudit/agent.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"

using namespace smartaudit;
using namespace smartaudit::agent;
using nlohmann::json;

namespace {

const llm::HashEmbedder kEmbedder;

KnowledgeRecord make_record(const std::string& desc, std::vector<std::string> tags, const std::string& when = "2024-05-01",
                            const std::string& supplier = "S1") {
  KnowledgeRecord r;
  r.supplier_id = supplier;
  r.tuned_description = desc;
  r.failure_pattern = "crack";
  r.tags = std::move(tags);
  r.root_cause = "root cause of " + desc;
  r.corrective_action = "action for " + desc;
  r.created_at = parse_timestamp(when + "T00:00:00Z");
  return validate_record(r, Taxonomy::default_6m());
}

struct Fixture {
  std::shared_ptr<copilot::KnowledgeState> kb = std::make_shared<copilot::KnowledgeState>();
  std::shared_ptr<llm::ScriptedBackend> backend = std::make_shared<llm::ScriptedBackend>();
  llm::Gateway gateway{backend};
  std::vector<std::string> ids;

  Fixture() {
    for (const auto* d : {"solder bridge on J3", "cold joint on U301", "crack in housing"}) {
      auto r = make_record(d, {"process"});
      ids.push_back(r.id);
      kb->upsert(r, kEmbedder);
    }
  }
  ToolContext context() {
    return {kb, std::make_shared<std::vector<HistoricalIssue>>(), &gateway, &kEmbedder, {}};
  }
  void script(const json& reply) { backend->enqueue("agent_step", reply.dump()); }
  AgentSession run(const std::string& request, int limit = 8) {
    SessionOptions o;
    o.session_id = "s-test";
    o.step_limit = limit;
    return run_session(request, ToolRegistry::defaults(), gateway, context(), o);
  }
};

}  // namespace

TEST(Intent, KeywordTable) {
  llm::Gateway g(std::make_shared<llm::MockBackend>());
  EXPECT_EQ(recognize_intent("top failure tags for supplier S1", g), Intent::commonality);
  EXPECT_EQ(recognize_intent("why does U301 keep failing", g), Intent::failure_analysis);
  EXPECT_EQ(recognize_intent("find similar solder issues", g), Intent::retrieval);
}

TEST(Intent, InvalidAnswerFallsBackToKeywords) {
  auto s = std::make_shared<llm::ScriptedBackend>();
  s->enqueue("intent_classify", R"({"intent":"poetry"})");
  llm::Gateway g(s);
  EXPECT_EQ(recognize_intent("why does U301 keep failing", g), Intent::failure_analysis);
}

TEST(Session, ScriptedTwoStep) {
  Fixture f;
  f.script({{"thought", "count tags"}, {"action", "commonality_stats"}, {"arguments", {{"group_by", "tag"}}}});
  f.script({{"thought", "done"}, {"final", "Process dominates."}});
  const auto s = f.run("top failure tags");
  EXPECT_EQ(s.status, SessionStatus::done);
  ASSERT_EQ(s.steps.size(), 2u);
  EXPECT_EQ(s.steps[0].kind, StepKind::action);
  EXPECT_EQ(s.steps[0].action, "commonality_stats");
  EXPECT_EQ(json::parse(s.steps[0].observation)["rows"][0]["key"], "process");
  EXPECT_EQ(s.steps[1].kind, StepKind::final);
  ASSERT_TRUE(s.final);
  EXPECT_EQ(s.final->report, "Process dominates.");
  EXPECT_EQ(s.final->payload["group_by"], "tag");
  EXPECT_EQ(s.intent, Intent::commonality);
}

TEST(Session, UnknownToolIsObservedAndSessionContinues) {
  Fixture f;
  f.script({{"thought", "try"}, {"action", "frobnicate"}, {"arguments", json::object()}});
  f.script({{"thought", "ok"}, {"final", "Recovered."}});
  const auto s = f.run("find similar solder issues");
  EXPECT_EQ(s.status, SessionStatus::done);
  ASSERT_EQ(s.steps.size(), 2u);
  EXPECT_EQ(s.steps[0].observation, "error: unknown tool 'frobnicate'");
  EXPECT_NE(s.steps[0].observation.find("unknown tool"), std::string::npos);
}

TEST(Session, NeverFinalFailsAtStepLimit) {
  Fixture f;
  for (int i = 0; i < 20; ++i) {
    f.script({{"thought", "again"}, {"action", "search_knowledge"}, {"arguments", {{"query", "solder"}}}});
  }
  const auto s = f.run("find similar solder issues");
  EXPECT_EQ(s.status, SessionStatus::failed);
  EXPECT_EQ(s.steps.size(), 8u);
  EXPECT_EQ(s.diagnostic, "step limit reached");
  EXPECT_FALSE(s.final);
}

TEST(Session, TwoConsecutiveParseFailuresFail) {
  Fixture f;
  for (int i = 0; i < 4; ++i) f.backend->enqueue("agent_step", "I refuse to use JSON");
  const auto s = f.run("find similar solder issues");
  EXPECT_EQ(s.status, SessionStatus::failed);
  EXPECT_EQ(s.diagnostic, "two consecutive parse failures");
  ASSERT_EQ(s.steps.size(), 2u);
  EXPECT_EQ(s.steps[0].kind, StepKind::parse_error);
}

TEST(Session, ToolErrorBecomesObservation) {
  Fixture f;
  f.script({{"thought", "bad k"}, {"action", "search_knowledge"}, {"arguments", {{"query", "x"}, {"k", 1000}}}});
  f.script({{"thought", "ok"}, {"final", "done"}});
  const auto s = f.run("find similar solder issues");
  ASSERT_EQ(s.steps.size(), 2u);
  EXPECT_EQ(s.steps[0].observation.rfind("error: ", 0), 0u);
  EXPECT_EQ(s.status, SessionStatus::done);
}

TEST(Session, MockFallbackRunsToCompletionDeterministically) {
  Fixture a, b;
  const auto s1 = a.run("why does the solder bridge keep failing");
  const auto s2 = b.run("why does the solder bridge keep failing");
  EXPECT_EQ(s1.status, SessionStatus::done);
  EXPECT_EQ(json(s1).dump(), json(s2).dump());
  EXPECT_EQ(s1.steps.size(), 3u);  // search, five_whys, final
}

TEST(Session, StepCallbackSeesEveryStep) {
  Fixture f;
  std::vector<int> seen;
  SessionOptions o;
  o.on_step = [&](const AgentSession&, const AgentStep& st) { seen.push_back(st.index); };
  const auto s = run_session("top failure tags", ToolRegistry::defaults(), f.gateway, f.context(), o);
  ASSERT_EQ(seen.size(), s.steps.size());
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], static_cast<int>(i + 1));
}

TEST(Commonality, EmptyKb) {
  copilot::KnowledgeState kb;
  const auto t = commonality_stats(kb, GroupBy::tag);
  EXPECT_TRUE(t.rows.empty());
  EXPECT_EQ(t.total, 0u);
}

TEST(Commonality, CountsAndParetoShares) {
  copilot::KnowledgeState kb;
  for (int i = 0; i < 10; ++i) {
    kb.upsert(make_record("finding " + std::to_string(i), {i < 6 ? "material" : "equipment"}), kEmbedder);
  }
  const auto t = commonality_stats(kb, GroupBy::tag);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].key, "material");
  EXPECT_EQ(t.rows[0].count, 6u);
  EXPECT_DOUBLE_EQ(t.rows[0].cumulative_share, 0.6);
  EXPECT_EQ(t.rows[1].key, "equipment");
  EXPECT_EQ(t.rows[1].count, 4u);
  EXPECT_DOUBLE_EQ(t.rows[1].cumulative_share, 1.0);
  EXPECT_EQ(t.records, 10u);
}

TEST(Commonality, TiesAreKeyAscending) {
  copilot::KnowledgeState kb;
  kb.upsert(make_record("a", {"method"}, "2024-01-01", "S2"), kEmbedder);
  kb.upsert(make_record("b", {"environment"}, "2024-01-01", "S1"), kEmbedder);
  const auto t = commonality_stats(kb, GroupBy::tag);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].key, "environment");
  const auto s = commonality_stats(kb, GroupBy::supplier);
  EXPECT_EQ(s.rows[0].key, "S1");
  EXPECT_THROW(parse_group_by("colour"), InvalidArgument);
}

TEST(Trend, Buckets) {
  copilot::KnowledgeState kb;
  EXPECT_TRUE(trend_series(kb).series.empty());
  kb.upsert(make_record("a", {"process"}, "2024-01-03"), kEmbedder);
  auto one = trend_series(kb);
  ASSERT_EQ(one.series.size(), 1u);
  EXPECT_EQ(one.series[0].count, 1u);
  kb.upsert(make_record("b", {"process"}, "2024-01-20"), kEmbedder);
  kb.upsert(make_record("c", {"process"}, "2024-03-09"), kEmbedder);
  const auto t = trend_series(kb);
  ASSERT_EQ(t.series.size(), 3u);
  EXPECT_EQ(t.series[0], (TrendBucket{"2024-01", 2}));
  EXPECT_EQ(t.series[1], (TrendBucket{"2024-02", 0}));
  EXPECT_EQ(t.series[2], (TrendBucket{"2024-03", 1}));
}

TEST(FiveWhys, DepthAndDeterminism) {
  Fixture f;
  const auto a = five_whys(f.ids[0], f.context());
  EXPECT_EQ(a.chain.size(), 5u);
  EXPECT_EQ(a, five_whys(f.ids[0], f.context()));
  EXPECT_EQ(five_whys(f.ids[0], f.context(), 3).chain.size(), 3u);
  EXPECT_THROW(five_whys("kr-missing", f.context()), NotFoundError);
}

TEST(FiveWhys, ScriptedChainIsReturnedExactly) {
  Fixture f;
  json chain = json::array();
  for (int i = 1; i <= 5; ++i) chain.push_back({{"why", "why " + std::to_string(i) + "?"}, {"because", "b" + std::to_string(i)}});
  f.backend->enqueue("five_whys", json{{"chain", chain}}.dump());
  const auto w = five_whys(f.ids[1], f.context());
  ASSERT_EQ(w.chain.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(w.chain[static_cast<std::size_t>(i)].why, chain[static_cast<std::size_t>(i)]["why"]);
    EXPECT_EQ(w.chain[static_cast<std::size_t>(i)].because, chain[static_cast<std::size_t>(i)]["because"]);
  }
}

TEST(EightD, SectionsInOrderAndComposition) {
  Fixture f;
  const auto one = eight_d_report({f.ids[0]}, f.context());
  ASSERT_EQ(one.sections.size(), 9u);
  std::size_t pos = 0;
  for (int d = 0; d <= 8; ++d) {
    const std::string id = "D" + std::to_string(d);
    EXPECT_EQ(one.sections[static_cast<std::size_t>(d)].id, id);
    const auto at = one.markdown.find("## " + id + " ");
    ASSERT_NE(at, std::string::npos) << id;
    EXPECT_GE(at, pos);
    pos = at;
  }
  const auto& d4 = one.sections[4].content;
  const auto chain = five_whys(f.ids[0], f.context());
  EXPECT_EQ(one.root_cause_chain, chain);
  for (const auto& p : chain.chain) {
    EXPECT_NE(d4.find(p.why), std::string::npos);
    EXPECT_NE(d4.find(p.because), std::string::npos);
  }

  const auto two = eight_d_report({f.ids[0], f.ids[1]}, f.context());
  const auto& d2 = two.sections[2].content;
  EXPECT_NE(d2.find(f.kb->record(f.ids[0]).tuned_description), std::string::npos);
  EXPECT_NE(d2.find(f.kb->record(f.ids[1]).tuned_description), std::string::npos);
  EXPECT_THROW(eight_d_report({}, f.context()), std::exception);
}

TEST(Tools, RegistryDescribesFiveTools) {
  auto reg = ToolRegistry::defaults();
  EXPECT_EQ(reg.names(), (std::vector<std::string>{"commonality_stats", "eight_d_report", "five_whys",
                                                   "search_knowledge", "trend_series"}));
  const Tool copy = *reg.find("five_whys");
  EXPECT_THROW(reg.add(copy), InvalidArgument);
}
