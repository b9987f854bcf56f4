// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/text_index.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "smartaudit/domain.hpp"
#include "smartaudit/errors.hpp"

namespace smartaudit::text {

namespace {

constexpr std::array<std::string_view, 64> kStopwords = {
    "a",     "about", "after", "all",  "also", "an",    "and",   "any",   "are",   "as",   "at",
    "be",    "been",  "but",   "by",   "can",  "could", "did",   "do",    "does",  "for",  "from",
    "had",   "has",   "have",  "he",   "her",  "his",   "how",   "i",     "if",    "in",   "into",
    "is",    "it",    "its",   "no",   "not",  "of",    "on",    "or",    "our",   "she",  "so",
    "than",  "that",  "the",   "their", "them", "then", "there", "these", "they",  "this", "to",
    "was",   "we",    "were",  "what", "when", "which", "while", "with",  "would"};
static_assert(std::is_sorted(kStopwords.begin(), kStopwords.end()));

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

bool is_stopword(std::string_view token) noexcept {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

std::vector<std::string> tokenize(std::string_view input, bool remove_stopwords) {
  const std::string text = canonicalize(input);
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) {
      if (!remove_stopwords || !is_stopword(current)) tokens.push_back(std::move(current));
      current.clear();
    }
  };
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c >= 0 && u_isalnum(c)) {
      append_utf8(current, u_tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

RankedList RankedList::from_unsorted(std::vector<ScoredDoc> docs, std::size_t k) {
  RankedList out;
  if (k < docs.size()) {
    std::partial_sort(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(k), docs.end(), ranks_before);
    docs.resize(k);
  } else {
    std::sort(docs.begin(), docs.end(), ranks_before);
  }
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].doc_id == docs[i - 1].doc_id) throw InvalidArgument("duplicate doc id in ranked list: " + docs[i].doc_id);
  }
  out.entries_ = std::move(docs);
  return out;
}

bool RankedList::well_formed() const {
  std::set<DocId> seen;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!seen.insert(entries_[i].doc_id).second) return false;
    if (i > 0 && !ranks_before(entries_[i - 1], entries_[i])) return false;
  }
  return true;
}

void Bm25Index::add(const DocId& id, std::span<const std::string> tokens) {
  if (contains(id)) remove(id);
  std::map<std::string, std::uint32_t> tf;
  for (const auto& t : tokens) {
    if (!t.empty()) ++tf[t];
  }
  const auto ordinal = static_cast<std::uint32_t>(ids_.size());
  ids_.push_back(id);
  const auto length = static_cast<std::uint32_t>(tokens.size());
  lengths_.push_back(length);
  live_.push_back(true);
  auto& fwd = forward_.emplace_back(tf.begin(), tf.end());
  ordinal_[id] = ordinal;
  for (const auto& [term, count] : fwd) {
    auto& stats = terms_[term];
    stats.postings.push_back({ordinal, count});
    ++stats.live_df;
  }
  ++live_count_;
  total_length_ += length;
}

bool Bm25Index::remove(const DocId& id) {
  auto it = ordinal_.find(id);
  if (it == ordinal_.end()) return false;
  const auto ordinal = it->second;
  for (const auto& [term, count] : forward_[ordinal]) {
    auto found = terms_.find(term);
    if (found != terms_.end() && found->second.live_df > 0) --found->second.live_df;
  }
  live_[ordinal] = false;
  --live_count_;
  total_length_ -= lengths_[ordinal];
  ordinal_.erase(it);
  ++tombstones_;
  return true;
}

void Bm25Index::compact() {
  if (tombstones_ == 0) return;
  Bm25Index fresh(params_);
  for (std::uint32_t o = 0; o < ids_.size(); ++o) {
    if (live_[o]) fresh.import_document(DocTerms{ids_[o], lengths_[o], forward_[o]});
  }
  *this = std::move(fresh);
}

bool Bm25Index::contains(const DocId& id) const noexcept { return ordinal_.count(id) != 0; }

double Bm25Index::avg_doc_length() const noexcept {
  return live_count_ == 0 ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(live_count_);
}

std::size_t Bm25Index::doc_length(const DocId& id) const {
  auto it = ordinal_.find(id);
  if (it == ordinal_.end()) throw NotFoundError("unknown doc id: " + id);
  return lengths_[it->second];
}

std::size_t Bm25Index::document_frequency(const std::string& term) const noexcept {
  auto it = terms_.find(term);
  return it == terms_.end() ? 0 : it->second.live_df;
}

double Bm25Index::idf(const std::string& term) const noexcept {
  const double n = static_cast<double>(live_count_);
  const double df = static_cast<double>(document_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::term_score(double idf, std::uint32_t tf, std::uint32_t length) const noexcept {
  const double avg = avg_doc_length();
  const double norm = avg > 0.0 ? static_cast<double>(length) / avg : 0.0;
  const double f = static_cast<double>(tf);
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

std::vector<std::string> Bm25Index::unique_terms(std::span<const std::string> query) const {
  std::vector<std::string> terms(query.begin(), query.end());
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

double Bm25Index::score(std::span<const std::string> query, const DocId& id) const {
  auto it = ordinal_.find(id);
  if (it == ordinal_.end()) throw NotFoundError("unknown doc id: " + id);
  const auto& fwd = forward_[it->second];
  double total = 0.0;
  for (const auto& term : unique_terms(query)) {
    auto pos = std::lower_bound(fwd.begin(), fwd.end(), term,
                                [](const auto& entry, const std::string& t) { return entry.first < t; });
    if (pos == fwd.end() || pos->first != term) continue;
    total += term_score(idf(term), pos->second, lengths_[it->second]);
  }
  return total;
}

RankedList Bm25Index::search(std::span<const std::string> query, std::size_t k, const DocFilter& filter) const {
  if (k == 0 || live_count_ == 0) return {};
  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& term : unique_terms(query)) {
    auto it = terms_.find(term);
    if (it == terms_.end() || it->second.live_df == 0) continue;
    const double term_idf = idf(term);
    for (const auto& p : it->second.postings) {
      if (!live_[p.doc]) continue;
      if (filter && !filter(ids_[p.doc])) continue;
      acc[p.doc] += term_score(term_idf, p.tf, lengths_[p.doc]);
    }
  }
  std::vector<ScoredDoc> docs;
  docs.reserve(acc.size());
  for (const auto& [ordinal, s] : acc) {
    if (s > 0.0) docs.push_back({ids_[ordinal], s});
  }
  return RankedList::from_unsorted(std::move(docs), k);
}

std::vector<Bm25Index::DocTerms> Bm25Index::export_documents() const {
  std::vector<DocTerms> docs;
  docs.reserve(live_count_);
  for (std::uint32_t o = 0; o < ids_.size(); ++o) {
    if (live_[o]) docs.push_back({ids_[o], lengths_[o], forward_[o]});
  }
  std::sort(docs.begin(), docs.end(), [](const DocTerms& a, const DocTerms& b) { return a.id < b.id; });
  return docs;
}

void Bm25Index::import_document(const DocTerms& doc) {
  if (contains(doc.id)) remove(doc.id);
  const auto ordinal = static_cast<std::uint32_t>(ids_.size());
  ids_.push_back(doc.id);
  lengths_.push_back(doc.length);
  live_.push_back(true);
  auto& fwd = forward_.emplace_back(doc.terms);
  std::sort(fwd.begin(), fwd.end());
  ordinal_[doc.id] = ordinal;
  for (const auto& [term, count] : fwd) {
    auto& stats = terms_[term];
    stats.postings.push_back({ordinal, count});
    ++stats.live_df;
  }
  ++live_count_;
  total_length_ += doc.length;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw InvalidArgument("cosine of zero vector");
  // Rounded to a fixed grid so documents whose similarity is mathematically
  // equal tie exactly and fall back to the doc_id order, instead of being
  // separated by rounding noise in the last bits.
  const double c = std::round(dot / (std::sqrt(nu) * std::sqrt(nv)) * 1e12) / 1e12;
  return std::clamp(c, -1.0, 1.0);
}

std::vector<double> normalized(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n == 0.0) throw InvalidArgument("cannot normalize zero vector");
  n = std::sqrt(n);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

VectorIndex::VectorIndex(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidArgument("vector dimension must be positive");
}

void VectorIndex::add(const DocId& id, std::span<const double> vec) {
  if (vec.size() != dimension_) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(vec.size()) + " vs " + std::to_string(dimension_));
  }
  store(id, normalized(vec));
}

void VectorIndex::add_unit(const DocId& id, std::span<const double> unit) {
  if (unit.size() != dimension_) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(unit.size()) + " vs " + std::to_string(dimension_));
  }
  double n = 0.0;
  for (double x : unit) n += x * x;
  if (std::abs(std::sqrt(n) - 1.0) > 1e-6) throw InvalidArgument("vector is not unit-norm");
  store(id, unit);
}

void VectorIndex::store(const DocId& id, std::span<const double> unit) {
  auto it = index_.find(id);
  if (it != index_.end()) {
    std::copy(unit.begin(), unit.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dimension_));
    return;
  }
  index_[id] = ids_.size();
  ids_.push_back(id);
  data_.insert(data_.end(), unit.begin(), unit.end());
}

bool VectorIndex::remove(const DocId& id) {
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  const std::size_t slot = it->second;
  const std::size_t last = ids_.size() - 1;
  if (slot != last) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(last * dimension_), dimension_,
                data_.begin() + static_cast<std::ptrdiff_t>(slot * dimension_));
    ids_[slot] = ids_[last];
    index_[ids_[slot]] = slot;
  }
  ids_.pop_back();
  data_.resize(ids_.size() * dimension_);
  index_.erase(id);
  return true;
}

std::span<const double> VectorIndex::vector(const DocId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("unknown doc id: " + id);
  return {data_.data() + it->second * dimension_, dimension_};
}

double VectorIndex::score(const DocId& id, std::span<const double> query) const {
  return cosine(vector(id), query);
}

RankedList VectorIndex::search(std::span<const double> query, std::size_t k, const DocFilter& filter) const {
  if (query.size() != dimension_) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(query.size()) + " vs " +
                          std::to_string(dimension_));
  }
  if (k == 0 || ids_.empty()) return {};
  std::vector<ScoredDoc> docs;
  for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
    if (filter && !filter(ids_[slot])) continue;
    const double s = cosine({data_.data() + slot * dimension_, dimension_}, query);
    if (s > 0.0) docs.push_back({ids_[slot], s});
  }
  return RankedList::from_unsorted(std::move(docs), k);
}

std::vector<DocId> VectorIndex::ids() const {
  std::vector<DocId> out = ids_;
  std::sort(out.begin(), out.end());
  return out;
}

RankedList rrf_fuse(std::span<const RankedList> lists, std::size_t k, unsigned k0) {
  if (lists.size() < 2) throw InvalidArgument("rrf_fuse needs at least two ranked lists");
  if (k0 == 0) throw InvalidArgument("rrf constant must be positive");
  std::map<DocId, double> fused;
  for (const auto& list : lists) {
    for (std::size_t r = 0; r < list.size(); ++r) {
      fused[list[r].doc_id] += 1.0 / (static_cast<double>(k0) + static_cast<double>(r + 1));
    }
  }
  std::vector<ScoredDoc> docs;
  docs.reserve(fused.size());
  for (auto& [id, s] : fused) docs.push_back({id, s});
  return RankedList::from_unsorted(std::move(docs), k);
}

std::size_t candidate_depth(std::size_t k, const HybridParams& params) noexcept {
  return std::max(params.candidate_multiplier * k, params.min_candidate_depth);
}

RankedList hybrid_search(const Bm25Index& bm25, const VectorIndex& vectors, std::string_view query_text,
                         std::span<const double> query_vec, std::size_t k, const HybridParams& params,
                         const DocFilter& filter) {
  if (k == 0) return {};
  const std::size_t depth = candidate_depth(k, params);
  const auto tokens = tokenize(query_text);
  const std::array<RankedList, 2> channels{bm25.search(tokens, depth, filter),
                                           vectors.search(query_vec, depth, filter)};
  return rrf_fuse(channels, k, params.rrf_k0);
}

}  // namespace smartaudit::text
