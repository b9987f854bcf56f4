// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations. They work from raw token lists and
// raw vectors and share no code with the indexes they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Doc {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<double> vec;
};

using Ranking = std::vector<std::pair<std::string, double>>;

inline void sort_ranking(Ranking& r) {
  std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

inline double bm25(const std::vector<Doc>& docs, const std::vector<std::string>& query, const Doc& d,
                   double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0;
  for (const auto& x : docs) total_len += static_cast<double>(x.tokens.size());
  const double avg = total_len / n;
  const std::set<std::string> terms(query.begin(), query.end());
  double s = 0;
  for (const auto& t : terms) {
    double df = 0;
    for (const auto& x : docs) df += std::count(x.tokens.begin(), x.tokens.end(), t) > 0 ? 1 : 0;
    const double tf = static_cast<double>(std::count(d.tokens.begin(), d.tokens.end(), t));
    if (tf == 0) continue;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double len = static_cast<double>(d.tokens.size());
    s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
  }
  return s;
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 0;
  // Similarities live on a 1e-12 grid so exact ties are real ties.
  return std::round(dot / std::sqrt(nu * nv) * 1e12) / 1e12;
}

// Every doc scored in both channels; positive scores only, each channel cut
// to `depth`, then reciprocal ranks summed.
inline Ranking hybrid(const std::vector<Doc>& docs, const std::vector<std::string>& query,
                      const std::vector<double>& qvec, std::size_t k, std::size_t depth, unsigned k0 = 60) {
  Ranking lex, sem;
  for (const auto& d : docs) {
    const double s = bm25(docs, query, d);
    if (s > 0) lex.emplace_back(d.id, s);
    const double c = cosine(d.vec, qvec);
    if (c > 0) sem.emplace_back(d.id, c);
  }
  sort_ranking(lex);
  sort_ranking(sem);
  if (lex.size() > depth) lex.resize(depth);
  if (sem.size() > depth) sem.resize(depth);
  std::map<std::string, double> fused;
  for (const auto* list : {&lex, &sem}) {
    for (std::size_t r = 0; r < list->size(); ++r) fused[(*list)[r].first] += 1.0 / (k0 + static_cast<double>(r + 1));
  }
  Ranking out(fused.begin(), fused.end());
  sort_ranking(out);
  if (out.size() > k) out.resize(k);
  return out;
}

// Mean binary cross-entropy of a logistic model, written out directly.
// S needs .features and .failed.
template <typename S>
double logistic_loss(const std::vector<double>& w, double b, const std::vector<S>& samples) {
  double total = 0;
  for (const auto& s : samples) {
    double z = b;
    for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * s.features[i];
    const double p = 1.0 / (1.0 + std::exp(-z));
    total += s.failed ? -std::log(p) : -std::log(1 - p);
  }
  return total / static_cast<double>(samples.size());
}

// Random corpus over a small vocabulary so term overlap and exact ties
// (repeated documents) both occur.
inline std::vector<Doc> random_corpus(std::mt19937_64& rng, std::size_t max_docs,
                                      const std::vector<std::string>& vocab) {
  std::uniform_int_distribution<std::size_t> n_docs(1, max_docs), len(1, 12), word(0, vocab.size() - 1);
  std::uniform_int_distribution<int> coin(0, 9);
  std::vector<Doc> docs;
  const std::size_t n = n_docs(rng);
  for (std::size_t i = 0; i < n; ++i) {
    Doc d;
    char id[16];
    std::snprintf(id, sizeof id, "d%04zu", i);
    d.id = id;
    if (!docs.empty() && coin(rng) == 0) {
      d.tokens = docs[std::uniform_int_distribution<std::size_t>(0, docs.size() - 1)(rng)].tokens;
    } else {
      const std::size_t l = len(rng);
      for (std::size_t t = 0; t < l; ++t) d.tokens.push_back(vocab[word(rng)]);
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

inline std::vector<std::string> default_vocab() {
  return {"solder", "bridge", "cold",  "joint", "label", "misprint", "crack", "seal",  "leak",   "torque",
          "drift",  "flux",   "void",  "pin",   "bent",  "lot",      "reel",  "smt",   "u301",   "reflow",
          "oven",   "stencil", "burr", "gap",   "dent",  "paint",    "weld",  "rivet", "gasket", "cable"};
}

}  // namespace oracle
