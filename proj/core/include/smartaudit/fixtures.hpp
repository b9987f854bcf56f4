// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "smartaudit/copilot.hpp"
#include "smartaudit/domain.hpp"

namespace smartaudit::fixtures {

// mt19937_64 with bounded draws done by hand, so the same seed yields the
// same data with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform in [lo, hi].
  int between(int lo, int hi);
  // Uniform in [0, 1) with 53 random bits.
  double unit();
  bool chance(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct FixtureOptions {
  std::uint64_t seed = 42;
  int suppliers = 5;
  int issues = 500;
  int audits = 1000;
  int checklist_items = 20;
  int findings = 50;
};

struct SyntheticData {
  std::vector<HistoricalIssue> history;
  std::vector<AuditObservation> audits;
  Checklist checklist;
  std::vector<copilot::RawFinding> findings;
  std::vector<std::string> hot_phrases;
};

// Two-word defect phrases with pairwise disjoint tokens.
const std::vector<std::string>& phrase_pool();

// History issues read "<phrase> and <phrase>". About 30% pair two hot
// phrases and fail with probability 0.8; the rest pair cold phrases and
// never fail. Audit items read "verify <phrase>" and fail with probability
// 0.9 when they share two or more content tokens with a failed issue, 0.1
// otherwise.
SyntheticData generate(const FixtureOptions& options);

// history.jsonl, audits.jsonl, checklists.jsonl, checklist.json, findings.jsonl
void write(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace smartaudit::fixtures
