// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <memory>

#include "smartaudit/embedder.hpp"
#include "smartaudit/fixtures.hpp"
#include "smartaudit/risk_engine.hpp"

using namespace smartaudit;

namespace {

struct Setup {
  fixtures::SyntheticData data;
  std::shared_ptr<risk::HistoryIndex> history;
  risk::RiskConfig config;
};

const Setup& setup() {
  static const Setup s = [] {
    Setup out;
    out.data = fixtures::generate({});
    out.history = std::make_shared<risk::HistoryIndex>(out.data.history, std::make_shared<llm::HashEmbedder>());
    return out;
  }();
  return s;
}

void BM_ObservationSamples(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(risk::observation_samples(s.data.audits, *s.history, s.config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.data.audits.size()));
}
BENCHMARK(BM_ObservationSamples)->Unit(benchmark::kMillisecond);

void BM_TrainModel(benchmark::State& state) {
  const auto& s = setup();
  const auto samples = risk::observation_samples(s.data.audits, *s.history, s.config);
  for (auto _ : state) benchmark::DoNotOptimize(risk::train_risk_model(samples, s.config.train));
}
BENCHMARK(BM_TrainModel)->Unit(benchmark::kMillisecond);

void BM_AssessChecklist(benchmark::State& state) {
  const auto& s = setup();
  const auto model = risk::train_risk_model(risk::observation_samples(s.data.audits, *s.history, s.config));
  for (auto _ : state) benchmark::DoNotOptimize(risk::assess_checklist(s.data.checklist, *s.history, model, s.config));
}
BENCHMARK(BM_AssessChecklist)->Unit(benchmark::kMicrosecond);

}  // namespace
