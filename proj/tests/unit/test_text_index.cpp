// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "smartaudit/embedder.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/index_snapshot.hpp"
#include "smartaudit/text_index.hpp"

using namespace smartaudit;
using namespace smartaudit::text;

namespace {

std::vector<std::string> ids_of(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& d : list) out.push_back(d.doc_id);
  return out;
}

Bm25Index small_corpus() {
  Bm25Index idx;
  idx.add_text("d1", "solder bridge defect");
  idx.add_text("d2", "label misprint");
  return idx;
}

}  // namespace

TEST(Tokenize, SplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Solder-bridge, defect!"), (std::vector<std::string>{"solder", "bridge", "defect"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("IC U301 reflow"), (std::vector<std::string>{"ic", "u301", "reflow"}));
}

TEST(Tokenize, StopwordsRemovedOnRequest) {
  EXPECT_EQ(tokenize("the bridge of solder", true), (std::vector<std::string>{"bridge", "solder"}));
  EXPECT_TRUE(is_stopword("and"));
}

TEST(Bm25, HandComputedScore) {
  const auto idx = small_corpus();
  const std::vector<std::string> q{"solder"};
  // N=2, df=1, idf=ln 2, tf=1, len=3, avglen=2.5
  const double expected = std::log(2.0) * 2.2 / (1 + 1.2 * (0.25 + 0.75 * 3 / 2.5));
  EXPECT_NEAR(idx.score(q, "d1"), 0.6407, 1e-4);
  EXPECT_NEAR(idx.score(q, "d1"), expected, 1e-12);
  EXPECT_EQ(idx.score(q, "d2"), 0.0);
  EXPECT_EQ(idx.score({}, "d1"), 0.0);
  EXPECT_EQ(idx.score({}, "d2"), 0.0);
}

TEST(Bm25, SearchReturnsPositiveScoresOnly) {
  const auto idx = small_corpus();
  const std::vector<std::string> q{"solder", "bridge"};
  EXPECT_EQ(ids_of(idx.search(q, 10)), (std::vector<std::string>{"d1"}));
  EXPECT_TRUE(idx.search(q, 0).empty());
}

TEST(Bm25, TiesBreakByDocId) {
  Bm25Index idx;
  idx.add_text("b", "crack seal");
  idx.add_text("a", "crack seal");
  idx.add_text("c", "torque drift");
  const std::vector<std::string> q{"crack"};
  EXPECT_EQ(ids_of(idx.search(q, 10)), (std::vector<std::string>{"a", "b"}));
}

TEST(Bm25, RemoveUpdatesStatistics) {
  auto idx = small_corpus();
  idx.add_text("d3", "solder void");
  EXPECT_TRUE(idx.remove("d3"));
  EXPECT_EQ(idx.doc_count(), 2u);
  EXPECT_NEAR(idx.score(std::vector<std::string>{"solder"}, "d1"), 0.6407, 1e-4);
  idx.compact();
  EXPECT_EQ(idx.tombstones(), 0u);
  EXPECT_NEAR(idx.score(std::vector<std::string>{"solder"}, "d1"), 0.6407, 1e-4);
}

TEST(Cosine, HandExamples) {
  const std::vector<double> x{1, 0}, y{0, 1}, d{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
  EXPECT_DOUBLE_EQ(cosine(x, x), 1.0);
  EXPECT_DOUBLE_EQ(cosine(x, y), 0.0);
  EXPECT_NEAR(cosine(d, x), 0.7071, 1e-4);
  EXPECT_NEAR(cosine(d, x), std::sqrt(0.5), 1e-6);
}

TEST(VectorIndex, ExactMatchRanksFirst) {
  VectorIndex idx(2);
  idx.add("a", std::vector<double>{0.6, 0.8});
  idx.add("b", std::vector<double>{1, 0});
  const auto r = idx.search(std::vector<double>{0.6, 0.8}, 2);
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r[0].doc_id, "a");
  EXPECT_NEAR(r[0].score, 1.0, 1e-12);
  EXPECT_TRUE(VectorIndex(2).search(std::vector<double>{1, 0}, 5).empty());
}

TEST(VectorIndex, MatchesExhaustiveScan) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    VectorIndex idx(8);
    std::vector<oracle::Doc> docs;
    for (int i = 0; i < 50; ++i) {
      oracle::Doc d;
      d.id = "v" + std::to_string(100 + i);
      for (int k = 0; k < 8; ++k) d.vec.push_back(g(rng));
      idx.add(d.id, d.vec);
      docs.push_back(d);
    }
    std::vector<double> q;
    for (int k = 0; k < 8; ++k) q.push_back(g(rng));
    oracle::Ranking expect;
    for (const auto& d : docs) {
      const double c = oracle::cosine(d.vec, q);
      if (c > 0) expect.emplace_back(d.id, c);
    }
    oracle::sort_ranking(expect);
    expect.resize(std::min<std::size_t>(5, expect.size()));
    const auto got = idx.search(q, 5);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].doc_id, expect[i].first);
      EXPECT_NEAR(got[i].score, expect[i].second, 1e-12);
    }
  }
}

TEST(VectorIndex, RejectsWrongDimensionAndZeroVectors) {
  VectorIndex idx(3);
  EXPECT_THROW(idx.add("a", std::vector<double>{1, 0}), InvalidArgument);
  EXPECT_THROW(idx.add("a", std::vector<double>{0, 0, 0}), InvalidArgument);
  EXPECT_THROW(idx.add_unit("a", std::vector<double>{1, 1, 0}), InvalidArgument);
}

TEST(Rrf, HandComputedFusion) {
  const auto a = RankedList::from_unsorted({{"d1", 3}, {"d2", 2}, {"d3", 1}}, 10);
  const auto b = RankedList::from_unsorted({{"d2", 2}, {"d1", 1}}, 10);
  const std::vector<RankedList> lists{a, b};
  const auto fused = rrf_fuse(lists, 10, 60);
  ASSERT_EQ(fused.size(), 3u);
  EXPECT_EQ(fused[0].doc_id, "d1");
  EXPECT_EQ(fused[1].doc_id, "d2");
  EXPECT_EQ(fused[2].doc_id, "d3");
  EXPECT_NEAR(fused[0].score, 0.032522, 1e-6);
  EXPECT_NEAR(fused[1].score, 0.032522, 1e-6);
  EXPECT_NEAR(fused[0].score, 1.0 / 61 + 1.0 / 62, 1e-15);
  EXPECT_NEAR(fused[2].score, 0.015873, 1e-6);
}

TEST(Rrf, IdenticalListsKeepOrder) {
  const auto a = RankedList::from_unsorted({{"x", 3}, {"m", 2}, {"a", 1}}, 10);
  const std::vector<RankedList> lists{a, a};
  EXPECT_EQ(ids_of(rrf_fuse(lists, 10)), (std::vector<std::string>{"x", "m", "a"}));
}

TEST(Rrf, SingleListDocRanksBelowSharedDocAtSameRank) {
  const auto a = RankedList::from_unsorted({{"only_a", 2}, {"y", 1}}, 10);
  const auto b = RankedList::from_unsorted({{"shared", 2}}, 10);
  const auto c = RankedList::from_unsorted({{"shared", 2}}, 10);
  // shared: 1/61 twice; only_a: 1/61 once
  const std::vector<RankedList> lists{a, b, c};
  const auto fused = rrf_fuse(lists, 10);
  EXPECT_EQ(fused[0].doc_id, "shared");
  EXPECT_GT(fused[0].score, fused[1].score);
}

TEST(Hybrid, TopInBothChannelsIsFirst) {
  llm::HashEmbedder emb;
  Bm25Index bm;
  VectorIndex vec(emb.dimension());
  for (const auto& [id, t] : std::vector<std::pair<std::string, std::string>>{
           {"a", "solder bridge on u301"}, {"b", "label misprint"}, {"c", "solder paste void"}}) {
    bm.add_text(id, t);
    vec.add(id, emb.embed(t));
  }
  const auto r = hybrid_search(bm, vec, "solder bridge on u301", emb.embed("solder bridge on u301"), 3);
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r[0].doc_id, "a");
}

TEST(Hybrid, NoOverlapAndOrthogonalQueryIsEmpty) {
  Bm25Index bm;
  VectorIndex vec(2);
  bm.add_text("a", "solder bridge");
  vec.add("a", std::vector<double>{1, 0});
  EXPECT_TRUE(hybrid_search(bm, vec, "label", std::vector<double>{0, 1}, 5).empty());
}

TEST(Hybrid, MatchesBruteForceOracleOnRandomCorpora) {
  std::mt19937_64 rng(20240);
  llm::HashEmbedder emb;
  const auto vocab = oracle::default_vocab();
  std::uniform_int_distribution<std::size_t> qlen(1, 4), word(0, vocab.size() - 1);
  for (int trial = 0; trial < 100; ++trial) {
    auto docs = oracle::random_corpus(rng, 200, vocab);
    Bm25Index bm;
    VectorIndex vec(emb.dimension());
    for (auto& d : docs) {
      d.vec = emb.embed(oracle::join(d.tokens));
      bm.add(d.id, d.tokens);
      vec.add(d.id, d.vec);
    }
    std::vector<std::string> q;
    for (std::size_t i = qlen(rng); i > 0; --i) q.push_back(vocab[word(rng)]);
    const auto qvec = emb.embed(oracle::join(q));
    const auto expect = oracle::hybrid(docs, q, qvec, 10, candidate_depth(10, {}));
    const auto got = hybrid_search(bm, vec, oracle::join(q), qvec, 10);
    ASSERT_EQ(got.size(), expect.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i].doc_id, expect[i].first) << "trial " << trial << " rank " << i + 1;
      ASSERT_NEAR(got[i].score, expect[i].second, 1e-12);
    }
  }
}

TEST(Hybrid, CandidateDepth) {
  EXPECT_EQ(candidate_depth(10, {}), 50u);
  EXPECT_EQ(candidate_depth(20, {}), 80u);
}

TEST(IndexSnapshot, RoundTripsAndDetectsCorruption) {
  IndexSnapshotData d;
  d.dimension = 2;
  d.sequence = 3;
  d.source_lines = 4;
  d.source_bytes = 99;
  d.bm25_docs.push_back({"a", 2, {{"crack", 1}, {"seal", 1}}});
  d.vector_sections.push_back({"full", {{"a", {0.6, 0.8}}}});
  const auto bytes = encode_snapshot(d);
  const auto back = decode_snapshot(bytes);
  EXPECT_EQ(back.sequence, 3u);
  EXPECT_EQ(back.source_bytes, 99u);
  ASSERT_EQ(back.vector_sections.size(), 1u);
  EXPECT_EQ(back.vector_sections[0].entries[0].second, (std::vector<double>{0.6, 0.8}));
  auto broken = bytes;
  broken[broken.size() / 2] ^= 0x5A;
  EXPECT_THROW(decode_snapshot(broken), StorageError);
  EXPECT_THROW(decode_snapshot(bytes.substr(0, bytes.size() - 3)), StorageError);
}
