// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "smartaudit/embedder.hpp"
#include "smartaudit/fixtures.hpp"
#include "smartaudit/text_index.hpp"

using namespace smartaudit;

namespace {

struct Corpus {
  text::Bm25Index bm25;
  text::VectorIndex vectors{64};
  llm::HashEmbedder embedder;
};

// Synthetic finding texts from the fixture generator's phrase pool.
Corpus build(std::size_t docs) {
  Corpus c;
  const auto& phrases = fixtures::phrase_pool();
  fixtures::Rng rng(7);
  for (std::size_t i = 0; i < docs; ++i) {
    std::string t = phrases[rng.below(phrases.size())] + " near " + phrases[rng.below(phrases.size())] +
                    " on line " + std::to_string(rng.below(40));
    const std::string id = "doc" + std::to_string(i);
    c.bm25.add_text(id, t);
    c.vectors.add(id, c.embedder.embed(t));
  }
  return c;
}

void BM_Bm25Search(benchmark::State& state) {
  const auto c = build(static_cast<std::size_t>(state.range(0)));
  const auto q = text::tokenize("solder bridge cold joint");
  for (auto _ : state) benchmark::DoNotOptimize(c.bm25.search(q, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Search)->Arg(1000)->Arg(10000);

void BM_VectorSearch(benchmark::State& state) {
  const auto c = build(static_cast<std::size_t>(state.range(0)));
  const auto q = c.embedder.embed("solder bridge cold joint");
  for (auto _ : state) benchmark::DoNotOptimize(c.vectors.search(q, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VectorSearch)->Arg(1000)->Arg(10000);

void BM_HybridSearch(benchmark::State& state) {
  const auto c = build(static_cast<std::size_t>(state.range(0)));
  const std::string query = "solder bridge cold joint";
  const auto q = c.embedder.embed(query);
  for (auto _ : state) benchmark::DoNotOptimize(text::hybrid_search(c.bm25, c.vectors, query, q, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HybridSearch)->Arg(1000)->Arg(10000);

void BM_Embed(benchmark::State& state) {
  llm::HashEmbedder e;
  const std::string text = "Found solder bridge on unit 17 at station 4; process and material involved.";
  for (auto _ : state) benchmark::DoNotOptimize(e.embed(text));
}
BENCHMARK(BM_Embed);

}  // namespace
