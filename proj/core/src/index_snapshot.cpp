// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/index_snapshot.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "smartaudit/errors.hpp"
#include "smartaudit/hashing.hpp"

namespace smartaudit::text {

namespace {

constexpr std::string_view kMagic = "AFIX1";

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string& bytes() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw StorageError("index snapshot truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const IndexSnapshotData& data) {
  Writer w;
  w.raw(kMagic);
  w.u32(data.dimension);
  w.u64(data.doc_count());
  w.u64(data.sequence);
  w.u64(data.source_lines);
  w.u64(data.source_bytes);
  w.f64(data.bm25_params.k1);
  w.f64(data.bm25_params.b);
  w.u64(data.bm25_docs.size());
  for (const auto& doc : data.bm25_docs) {
    w.str(doc.id);
    w.u32(doc.length);
    w.u32(static_cast<std::uint32_t>(doc.terms.size()));
    for (const auto& [term, tf] : doc.terms) {
      w.str(term);
      w.u32(tf);
    }
  }
  w.u32(static_cast<std::uint32_t>(data.vector_sections.size()));
  for (const auto& section : data.vector_sections) {
    w.str(section.name);
    w.u64(section.entries.size());
    for (const auto& [id, vec] : section.entries) {
      if (vec.size() != data.dimension) throw InvalidArgument("snapshot vector dimension mismatch for " + id);
      w.str(id);
      for (double x : vec) w.f64(x);
    }
  }
  const auto checksum = fnv1a64(w.bytes());
  w.u64(checksum);
  return std::move(w.bytes());
}

IndexSnapshotData decode_snapshot(const std::string& bytes) {
  if (bytes.size() < kMagic.size() + 8 || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw StorageError("index snapshot: bad magic");
  }
  const std::string_view body(bytes.data(), bytes.size() - 8);
  Reader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.u64() != fnv1a64(body)) throw StorageError("index snapshot: checksum mismatch");

  Reader r(body);
  r.raw(kMagic.size());
  IndexSnapshotData data;
  data.dimension = r.u32();
  const auto doc_count = r.u64();
  data.sequence = r.u64();
  data.source_lines = r.u64();
  data.source_bytes = r.u64();
  data.bm25_params.k1 = r.f64();
  data.bm25_params.b = r.f64();
  const auto n_docs = r.u64();
  if (n_docs != doc_count) throw StorageError("index snapshot: doc_count header disagrees with body");
  data.bm25_docs.reserve(n_docs);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    Bm25Index::DocTerms doc;
    doc.id = r.str();
    doc.length = r.u32();
    const auto n_terms = r.u32();
    doc.terms.reserve(n_terms);
    for (std::uint32_t t = 0; t < n_terms; ++t) {
      auto term = r.str();
      doc.terms.emplace_back(std::move(term), r.u32());
    }
    data.bm25_docs.push_back(std::move(doc));
  }
  const auto n_sections = r.u32();
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    IndexSnapshotData::VectorSection section;
    section.name = r.str();
    const auto n = r.u64();
    section.entries.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto id = r.str();
      std::vector<double> vec(data.dimension);
      for (auto& x : vec) x = r.f64();
      section.entries.emplace_back(std::move(id), std::move(vec));
    }
    data.vector_sections.push_back(std::move(section));
  }
  if (r.pos() != body.size()) throw StorageError("index snapshot: trailing bytes");
  return data;
}

void write_snapshot_file(const std::filesystem::path& path, const IndexSnapshotData& data) {
  const std::string bytes = encode_snapshot(data);
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageError("cannot create " + tmp + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(fd);
      ::unlink(tmp.c_str());
      throw StorageError("write " + tmp + ": " + why);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    throw StorageError("fsync " + tmp + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    ::unlink(tmp.c_str());
    throw StorageError("rename " + tmp + ": " + ec.message());
  }
}

IndexSnapshotData read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_snapshot(ss.str());
}

}  // namespace smartaudit::text
