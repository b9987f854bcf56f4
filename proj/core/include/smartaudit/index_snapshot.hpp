// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "smartaudit/text_index.hpp"

namespace smartaudit::text {

// On-disk index snapshot ("AFIX1").
//
// Layout, all integers little-endian, strings as u32 length + bytes:
//   magic "AFIX1" | u32 dimension | u64 doc_count
//   u64 sequence | u64 source_lines | u64 source_bytes
//   f64 k1 | f64 b | u64 n_docs | per doc: str id, u32 length, u32 n_terms, per term: str, u32 tf
//   u32 n_sections | per section: str name, u64 n, per entry: str id, f64[dimension]
//   u64 fnv1a64 of every preceding byte
struct IndexSnapshotData {
  std::uint32_t dimension = 0;
  std::uint64_t sequence = 0;
  // Extent of the record log the snapshot covers.
  std::uint64_t source_lines = 0;
  std::uint64_t source_bytes = 0;
  Bm25Params bm25_params;
  std::vector<Bm25Index::DocTerms> bm25_docs;
  struct VectorSection {
    std::string name;
    std::vector<std::pair<DocId, std::vector<double>>> entries;
  };
  std::vector<VectorSection> vector_sections;

  std::uint64_t doc_count() const noexcept { return bm25_docs.size(); }
};

std::string encode_snapshot(const IndexSnapshotData& data);
// throws StorageError on bad magic, truncation, or checksum mismatch
IndexSnapshotData decode_snapshot(const std::string& bytes);

// Writes to a temp file in the same directory, fsyncs, then renames.
void write_snapshot_file(const std::filesystem::path& path, const IndexSnapshotData& data);
IndexSnapshotData read_snapshot_file(const std::filesystem::path& path);

}  // namespace smartaudit::text
