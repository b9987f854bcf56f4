// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "../support.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"
#include "smartaudit/store.hpp"

using namespace smartaudit;
using namespace smartaudit::store;
using nlohmann::json;

namespace {

const llm::HashEmbedder kEmbedder;

KnowledgeRecord make_record(int i) {
  static const char* words[] = {"solder", "bridge", "crack", "seal", "leak", "torque", "drift", "label", "flux", "void"};
  KnowledgeRecord r;
  r.supplier_id = "S" + std::to_string(1 + i % 3);
  r.tuned_description = std::string(words[i % 10]) + " " + words[(i * 7 + 3) % 10] + " case " + std::to_string(i);
  r.failure_pattern = "crack";
  r.tags = {i % 2 ? "process" : "material"};
  r.root_cause = "rc";
  r.corrective_action = "ca";
  r.created_at = parse_timestamp("2024-04-01T00:00:00Z");
  r.summary_rounds = {std::string(words[i % 10]) + " case"};
  return validate_record(r, Taxonomy::default_6m());
}

std::vector<std::string> probe(const copilot::KnowledgeState& kb) {
  std::vector<std::string> out;
  static const char* queries[] = {"solder", "bridge crack", "seal leak", "torque", "drift label", "flux void",
                                  "case 3", "case 17", "solder seal", "leak", "label", "void drift",
                                  "crack", "bridge", "torque flux", "case", "seal", "solder void", "label leak",
                                  "nothing matches"};
  for (const char* q : queries) {
    for (auto mode : {copilot::SearchMode::hybrid, copilot::SearchMode::bm25, copilot::SearchMode::semantic}) {
      out.push_back(json(copilot::search_knowledge(kb, kEmbedder, q, mode, 10)).dump());
    }
  }
  return out;
}

}  // namespace

TEST(Jsonl, AppendOffsetsIncreaseAndReload) {
  support::TempDir dir;
  std::uint64_t a, b;
  {
    JsonlWriter w(dir / "x.jsonl");
    a = w.append(json{{"n", 1}});
    b = w.append(json{{"n", 2}});
  }
  EXPECT_LT(a, b);
  const auto c = read_jsonl(dir / "x.jsonl");
  ASSERT_EQ(c.lines.size(), 2u);
  EXPECT_EQ(c.lines[1].value["n"], 2);
  EXPECT_EQ(c.lines[1].offset, b);
}

TEST(Jsonl, TruncatedFinalLineIsDroppedWithWarning) {
  support::TempDir dir;
  {
    JsonlWriter w(dir / "x.jsonl");
    w.append(json{{"n", 1}});
    w.append(json{{"n", 2}});
  }
  auto text = support::slurp(dir / "x.jsonl");
  support::write_text(dir / "x.jsonl", text.substr(0, text.size() - 4));
  const auto c = read_jsonl(dir / "x.jsonl");
  ASSERT_EQ(c.lines.size(), 1u);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("x.jsonl:2 truncated"), std::string::npos);
  {
    JsonlWriter w(dir / "x.jsonl");  // drops the torn tail
    w.append(json{{"n", 3}});
  }
  const auto again = read_jsonl(dir / "x.jsonl");
  ASSERT_EQ(again.lines.size(), 2u);
  EXPECT_EQ(again.lines[1].value["n"], 3);
  EXPECT_TRUE(again.warnings.empty());
}

TEST(Load, EmptyDirectory) {
  support::TempDir dir;
  const auto s = load(DataFiles{dir.path()}, kEmbedder);
  EXPECT_EQ(s.kb.size(), 0u);
  EXPECT_TRUE(s.history.empty());
  EXPECT_FALSE(s.snapshot_used);
}

TEST(Load, RecordsSurviveReloadAndTornTail) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  {
    Store st(files);
    for (int i = 0; i < 3; ++i) st.append_record(make_record(i));
  }
  EXPECT_EQ(load(files, kEmbedder).kb.size(), 3u);
  const auto text = support::slurp(files.records());
  support::write_text(files.records(), text.substr(0, text.size() - 10));
  const auto s = load(files, kEmbedder);
  EXPECT_EQ(s.kb.size(), 2u);
  EXPECT_FALSE(s.kb.contains(make_record(2).id));
  ASSERT_FALSE(s.warnings.empty());
  EXPECT_NE(s.warnings[0].find("truncated"), std::string::npos);
}

TEST(Load, CorruptMiddleLineIsFatal) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  {
    Store st(files);
    for (int i = 0; i < 10; ++i) st.append_record(make_record(i));
  }
  std::istringstream in(support::slurp(files.records()));
  std::string line, out;
  for (int n = 1; std::getline(in, line); ++n) out += (n == 7 ? std::string("{\"id\": oops") : line) + "\n";
  support::write_text(files.records(), out);
  try {
    load(files, kEmbedder);
    FAIL();
  } catch (const StorageError& e) {
    EXPECT_STREQ(e.what(), "records.jsonl:7 malformed");
  }
}

TEST(Snapshot, EmptyStateAndSequence) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  Store st(files, 5);
  const auto a = st.snapshot(copilot::KnowledgeState{});
  EXPECT_EQ(a.sequence, 1u);
  EXPECT_EQ(a.record_count, 0u);
  const auto s = load(files, kEmbedder);
  EXPECT_EQ(s.snapshot_used, 1u);
  EXPECT_EQ(s.kb.size(), 0u);
  EXPECT_EQ(st.snapshot(copilot::KnowledgeState{}).sequence, 2u);
  EXPECT_EQ(st.snapshot(copilot::KnowledgeState{}).sequence, 3u);
}

TEST(Snapshot, RetentionPrunesOldFiles) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  Store st(files, 2);
  for (int i = 0; i < 4; ++i) st.snapshot(copilot::KnowledgeState{});
  const auto list = list_snapshots(files);
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list.back().sequence, 4u);
}

TEST(Snapshot, SnapshotPlusTailEqualsFullReplay) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  {
    Store st(files);
    copilot::KnowledgeState kb;
    for (int i = 0; i < 30; ++i) {
      const auto r = make_record(i);
      st.append_record(r);
      kb.upsert(r, kEmbedder);
    }
    const auto before = probe(load(files, kEmbedder, LoadMode::full_replay).kb);
    st.snapshot(kb);
    EXPECT_EQ(probe(load(files, kEmbedder).kb), before);  // load-after-snapshot equals load-before
    // A later version of record 4 replaces it in the tail.
    auto updated = make_record(4);
    updated.quality = QualityScore::from_dimensions(4, 3, 5, 2);
    st.append_record(updated);
    for (int i = 30; i < 40; ++i) st.append_record(make_record(i));
  }
  const auto snap = load(files, kEmbedder, LoadMode::prefer_snapshot);
  const auto full = load(files, kEmbedder, LoadMode::full_replay);
  EXPECT_EQ(snap.snapshot_used, 1u);
  EXPECT_FALSE(full.snapshot_used);
  EXPECT_EQ(snap.kb.size(), 40u);
  EXPECT_EQ(probe(snap.kb), probe(full.kb));
  EXPECT_EQ(snap.kb.record(make_record(4).id).quality->overall, 70);
}

TEST(Snapshot, CorruptSnapshotFallsBackToReplay) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  {
    Store st(files);
    copilot::KnowledgeState kb;
    for (int i = 0; i < 5; ++i) {
      st.append_record(make_record(i));
      kb.upsert(make_record(i), kEmbedder);
    }
    st.snapshot(kb);
  }
  const auto snap = list_snapshots(files).back().file;
  auto bytes = support::slurp(snap);
  bytes[bytes.size() / 2] ^= 0x11;
  support::write_text(snap, bytes);
  const auto s = load(files, kEmbedder);
  EXPECT_FALSE(s.snapshot_used);
  EXPECT_EQ(s.kb.size(), 5u);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(Sessions, SaveAndLoad) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  Store st(files);
  agent::AgentSession s;
  s.session_id = "s-000001";
  s.request = "top tags";
  s.intent = agent::Intent::commonality;
  s.steps.push_back({1, agent::StepKind::action, "count", "commonality_stats", json{{"group_by", "tag"}}, "{}"});
  s.steps.push_back({2, agent::StepKind::final, "done", "", json::object(), ""});
  s.final = agent::AgentFinal{"report", json{{"rows", json::array()}}};
  s.status = agent::SessionStatus::done;
  st.save_session(s);
  EXPECT_EQ(st.load_session("s-000001"), s);
  EXPECT_EQ(st.session_ids(), (std::vector<std::string>{"s-000001"}));
  const auto lines = read_jsonl(files.session_file("s-000001")).lines;
  EXPECT_EQ(lines.size(), s.steps.size() + 1);
  EXPECT_THROW(st.load_session("s-000404"), NotFoundError);
}

TEST(Quarantine, IdsAreSequential) {
  support::TempDir dir;
  DataFiles files{dir.path()};
  {
    Store st(files);
    EXPECT_EQ(st.append_quarantine({"", "parse", "bad json", json("{oops")}).id, "q-000001");
    EXPECT_EQ(st.append_quarantine({"", "process", "unknown tag: x", json::object()}).id, "q-000002");
  }
  Store again(files);
  EXPECT_EQ(again.append_quarantine({"", "parse", "again", json(nullptr)}).id, "q-000003");
  EXPECT_EQ(load(files, kEmbedder).quarantine.size(), 3u);
}
