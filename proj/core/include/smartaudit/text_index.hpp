// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace smartaudit::text {

using DocId = std::string;
using DocFilter = std::function<bool(const DocId&)>;

// Lowercase terms split on every non-alphanumeric code point. Input is
// NFC-normalized first so composed and decomposed forms tokenize alike.
std::vector<std::string> tokenize(std::string_view text, bool remove_stopwords = false);

bool is_stopword(std::string_view token) noexcept;

struct ScoredDoc {
  DocId doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

// Descending score, ties by doc_id ascending.
bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept;

class RankedList {
 public:
  RankedList() = default;

  // Sorts under (score desc, doc_id asc) and keeps the first k.
  // Duplicate doc ids are rejected.
  static RankedList from_unsorted(std::vector<ScoredDoc> docs, std::size_t k);

  const std::vector<ScoredDoc>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const ScoredDoc& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  // Strict (score desc, doc_id asc) order and no duplicate ids.
  bool well_formed() const;

  friend bool operator==(const RankedList&, const RankedList&) = default;

 private:
  std::vector<ScoredDoc> entries_;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Inverted index with Okapi BM25 scoring and the non-negative idf variant
// ln((N - df + 0.5) / (df + 0.5) + 1).
//
// Removal tombstones the posting entries; collection statistics are
// updated immediately so scores always match a from-scratch build over the
// live documents. compact() drops tombstoned postings.
class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  // Re-adding an existing id replaces its content.
  void add(const DocId& id, std::span<const std::string> tokens);
  void add_text(const DocId& id, std::string_view text) { add(id, tokenize(text)); }
  bool remove(const DocId& id);
  void compact();

  bool contains(const DocId& id) const noexcept;
  std::size_t doc_count() const noexcept { return live_count_; }
  double avg_doc_length() const noexcept;
  std::size_t doc_length(const DocId& id) const;
  std::size_t document_frequency(const std::string& term) const noexcept;
  double idf(const std::string& term) const noexcept;
  const Bm25Params& params() const noexcept { return params_; }
  std::size_t tombstones() const noexcept { return tombstones_; }

  // Sum over unique query terms. throws NotFoundError for unknown ids.
  double score(std::span<const std::string> query, const DocId& id) const;
  // Top-k documents with score > 0.
  RankedList search(std::span<const std::string> query, std::size_t k, const DocFilter& filter = {}) const;

  // Live documents in id order with their term frequencies, sorted by term.
  struct DocTerms {
    DocId id;
    std::uint32_t length = 0;
    std::vector<std::pair<std::string, std::uint32_t>> terms;
  };
  std::vector<DocTerms> export_documents() const;
  void import_document(const DocTerms& doc);

 private:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };
  struct TermStats {
    std::vector<Posting> postings;
    std::uint32_t live_df = 0;
  };

  std::vector<std::string> unique_terms(std::span<const std::string> query) const;
  double term_score(double idf, std::uint32_t tf, std::uint32_t length) const noexcept;

  Bm25Params params_;
  std::vector<DocId> ids_;
  std::vector<std::uint32_t> lengths_;
  std::vector<bool> live_;
  std::vector<std::vector<std::pair<std::string, std::uint32_t>>> forward_;
  std::unordered_map<DocId, std::uint32_t> ordinal_;
  std::unordered_map<std::string, TermStats> terms_;
  std::size_t live_count_ = 0;
  std::uint64_t total_length_ = 0;
  std::size_t tombstones_ = 0;
};

// dot(u,v) / (|u| |v|), rounded to 12 decimal places. throws InvalidArgument
// on dimension mismatch or a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

// L2-normalized copy; throws InvalidArgument on a zero vector.
std::vector<double> normalized(std::span<const double> v);

// Exhaustive-scan cosine index over unit vectors of fixed dimension.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dimension);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return index_.size(); }
  bool contains(const DocId& id) const noexcept { return index_.count(id) != 0; }

  // Stores the normalized vector; replaces an existing id.
  void add(const DocId& id, std::span<const double> vec);
  // Stores the vector bit-for-bit (snapshot restore). throws InvalidArgument
  // unless it is unit-norm within 1e-6.
  void add_unit(const DocId& id, std::span<const double> unit);
  bool remove(const DocId& id);
  std::span<const double> vector(const DocId& id) const;

  // Cosine between the stored vector and query (query need not be unit).
  double score(const DocId& id, std::span<const double> query) const;
  // Top-k with cosine > 0.
  RankedList search(std::span<const double> query, std::size_t k, const DocFilter& filter = {}) const;

  std::vector<DocId> ids() const;  // sorted

 private:
  void store(const DocId& id, std::span<const double> unit);

  std::size_t dimension_;
  std::vector<DocId> ids_;
  std::vector<double> data_;
  std::unordered_map<DocId, std::size_t> index_;
};

// Reciprocal Rank Fusion over two or more lists; ranks start at 1.
// throws InvalidArgument with fewer than two lists.
RankedList rrf_fuse(std::span<const RankedList> lists, std::size_t k, unsigned k0 = 60);

struct HybridParams {
  unsigned rrf_k0 = 60;
  std::size_t candidate_multiplier = 4;
  std::size_t min_candidate_depth = 50;
};

std::size_t candidate_depth(std::size_t k, const HybridParams& params) noexcept;

RankedList hybrid_search(const Bm25Index& bm25, const VectorIndex& vectors, std::string_view query_text,
                         std::span<const double> query_vec, std::size_t k, const HybridParams& params = {},
                         const DocFilter& filter = {});

// Copy-on-write holder: one writer mutates a private master copy, readers
// get an immutable published snapshot. Publication copies the master lazily
// on the first read after a write, so a batch of writes costs one copy.
template <typename T>
class SnapshotCell {
 public:
  explicit SnapshotCell(T initial = T{}) : master_(std::move(initial)) {}

  template <typename Fn>
  decltype(auto) update(Fn&& fn) {
    std::lock_guard lock(mutex_);
    dirty_ = true;
    return fn(master_);
  }

  std::shared_ptr<const T> snapshot() const {
    std::lock_guard lock(mutex_);
    if (dirty_ || !published_) {
      published_ = std::make_shared<const T>(master_);
      dirty_ = false;
    }
    return published_;
  }

 private:
  mutable std::mutex mutex_;
  T master_;
  mutable std::shared_ptr<const T> published_;
  mutable bool dirty_ = true;
};

}  // namespace smartaudit::text
