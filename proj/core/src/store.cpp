// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "smartaudit/errors.hpp"
#include "smartaudit/index_snapshot.hpp"
#include "smartaudit/json_io.hpp"

namespace smartaudit::store {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::string errno_text() { return std::strerror(errno); }

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError("write " + path.string() + ": " + errno_text());
    }
    done += static_cast<std::size_t>(n);
  }
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

template <typename T>
T decode_line(const JsonlLine& line, const fs::path& file) {
  try {
    return line.value.get<T>();
  } catch (const std::exception&) {
    throw StorageError(file.filename().string() + ":" + std::to_string(line.line_number) + " malformed");
  }
}

template <typename T>
std::vector<T> load_all(const fs::path& file, std::vector<std::string>& warnings) {
  std::vector<T> out;
  if (!fs::exists(file)) return out;
  auto contents = read_jsonl(file);
  warnings.insert(warnings.end(), contents.warnings.begin(), contents.warnings.end());
  for (const auto& line : contents.lines) out.push_back(decode_line<T>(line, file));
  return out;
}

}  // namespace

JsonlContents read_jsonl(const fs::path& path) {
  JsonlContents out;
  if (!fs::exists(path)) return out;
  const std::string data = read_file(path);
  const std::string name = path.filename().string();
  std::size_t pos = 0;
  std::size_t line_number = 0;
  while (pos < data.size()) {
    ++line_number;
    const auto nl = data.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const auto end = terminated ? nl : data.size();
    const std::string_view text(data.data() + pos, end - pos);
    if (!blank(text)) {
      json value = json::parse(text, nullptr, false);
      if (value.is_discarded()) {
        if (!terminated) {
          out.warnings.push_back(name + ":" + std::to_string(line_number) +
                                 " truncated final line ignored (" + std::to_string(text.size()) + " bytes)");
          break;
        }
        throw StorageError(name + ":" + std::to_string(line_number) + " malformed");
      }
      out.lines.push_back({line_number, pos, std::move(value)});
    }
    pos = terminated ? nl + 1 : data.size();
    out.valid_bytes = pos;
  }
  return out;
}

JsonlWriter::JsonlWriter(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  const auto contents = read_jsonl(path_);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw StorageError("open " + path_.string() + ": " + errno_text());
  const auto on_disk = fs::file_size(path_);
  if (on_disk > contents.valid_bytes) {
    // Interrupted append: the partial line was never acknowledged.
    if (::ftruncate(fd_, static_cast<off_t>(contents.valid_bytes)) != 0) {
      throw StorageError("truncate " + path_.string() + ": " + errno_text());
    }
    ::fsync(fd_);
  }
  size_ = contents.valid_bytes;
  lines_ = contents.lines.size();
  if (size_ > 0) {
    // A complete but unterminated last line (hand-edited file) gets its newline.
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(size_ - 1));
    if (in.get() != '\n') {
      write_all(fd_, "\n", path_);
      ++size_;
    }
  }
}

JsonlWriter::~JsonlWriter() {
  if (fd_ >= 0) ::close(fd_);
}

std::uint64_t JsonlWriter::append(const json& value) {
  const std::string line = value.dump() + "\n";
  const auto offset = size_;
  write_all(fd_, line, path_);
  if (::fsync(fd_) != 0) throw StorageError("fsync " + path_.string() + ": " + errno_text());
  size_ += line.size();
  ++lines_;
  return offset;
}

json to_json(const QuarantineEntry& q) {
  return json{{"id", q.id}, {"stage", q.stage}, {"reason", q.reason}, {"raw", q.raw}};
}

QuarantineEntry quarantine_from_json(const json& j) {
  QuarantineEntry q;
  q.id = j.at("id").get<std::string>();
  q.stage = j.at("stage").get<std::string>();
  q.reason = j.at("reason").get<std::string>();
  q.raw = j.at("raw");
  return q;
}

std::vector<SnapshotInfo> list_snapshots(const DataFiles& files) {
  std::vector<SnapshotInfo> out;
  if (!fs::is_directory(files.snapshots())) return out;
  for (const auto& entry : fs::directory_iterator(files.snapshots())) {
    if (entry.path().extension() != ".afix") continue;
    const auto stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    out.push_back({std::stoull(stem), entry.path(), 0});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sequence < b.sequence; });
  return out;
}

namespace {

struct Quarantined {
  QuarantineEntry entry;
};

void from_json(const json& j, Quarantined& q) { q.entry = quarantine_from_json(j); }

}  // namespace

LoadedState load(const DataFiles& files, const llm::Embedder& embedder, LoadMode mode) {
  LoadedState state;
  state.kb = copilot::KnowledgeState(embedder.dimension());

  std::vector<KnowledgeRecord> versions;
  std::vector<std::uint64_t> ends;  // byte end of each record line
  if (fs::exists(files.records())) {
    auto contents = read_jsonl(files.records());
    state.warnings.insert(state.warnings.end(), contents.warnings.begin(), contents.warnings.end());
    for (std::size_t i = 0; i < contents.lines.size(); ++i) {
      const auto& line = contents.lines[i];
      auto record = decode_line<KnowledgeRecord>(line, files.records());
      if (record.id.empty()) {
        throw StorageError("records.jsonl:" + std::to_string(line.line_number) + " malformed");
      }
      versions.push_back(std::move(record));
      ends.push_back(i + 1 < contents.lines.size() ? contents.lines[i + 1].offset : contents.valid_bytes);
    }
    state.record_lines = versions.size();
    state.record_bytes = contents.valid_bytes;
  }

  bool restored = false;
  if (mode == LoadMode::prefer_snapshot) {
    auto snaps = list_snapshots(files);
    for (auto it = snaps.rbegin(); it != snaps.rend() && !restored; ++it) {
      try {
        const auto data = text::read_snapshot_file(it->file);
        if (data.dimension != embedder.dimension()) throw StorageError("dimension differs from embedder");
        if (data.source_lines > versions.size()) throw StorageError("covers more lines than the log has");
        const std::uint64_t expected_bytes = data.source_lines == 0 ? 0 : ends[data.source_lines - 1];
        if (expected_bytes != data.source_bytes) throw StorageError("log prefix does not match");
        const std::vector<KnowledgeRecord> covered(versions.begin(),
                                                   versions.begin() + static_cast<std::ptrdiff_t>(data.source_lines));
        state.kb = copilot::KnowledgeState::restore(data, covered);
        for (std::size_t i = data.source_lines; i < versions.size(); ++i) state.kb.upsert(versions[i], embedder);
        state.snapshot_used = it->sequence;
        restored = true;
      } catch (const StorageError& e) {
        state.warnings.push_back("snapshot " + it->file.filename().string() + " skipped: " + e.what());
      } catch (const InvalidArgument& e) {
        state.warnings.push_back("snapshot " + it->file.filename().string() + " skipped: " + e.what());
      }
    }
  }
  if (!restored) {
    state.kb = copilot::KnowledgeState(embedder.dimension());
    for (const auto& r : versions) state.kb.upsert(r, embedder);
  }

  state.history = load_all<HistoricalIssue>(files.history(), state.warnings);
  state.checklists = load_all<Checklist>(files.checklists(), state.warnings);
  state.audits = load_all<AuditObservation>(files.audits(), state.warnings);
  for (auto& q : load_all<Quarantined>(files.quarantine(), state.warnings)) state.quarantine.push_back(std::move(q.entry));
  return state;
}

Store::Store(DataFiles files, std::size_t snapshot_retention)
    : files_(std::move(files)),
      retention_(std::max<std::size_t>(1, snapshot_retention)),
      records_(files_.records()),
      history_(files_.history()),
      checklists_(files_.checklists()),
      audits_(files_.audits()),
      quarantine_(files_.quarantine()) {
  fs::create_directories(files_.sessions());
  fs::create_directories(files_.snapshots());
}

std::uint64_t Store::append_record(const KnowledgeRecord& record) { return records_.append(json(record)); }
std::uint64_t Store::append_history(const HistoricalIssue& issue) { return history_.append(json(issue)); }
std::uint64_t Store::append_checklist(const Checklist& checklist) { return checklists_.append(json(checklist)); }
std::uint64_t Store::append_audit(const AuditObservation& observation) { return audits_.append(json(observation)); }

QuarantineEntry Store::append_quarantine(QuarantineEntry entry) {
  if (entry.id.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q-%06llu", static_cast<unsigned long long>(quarantine_.lines() + 1));
    entry.id = buf;
  }
  quarantine_.append(to_json(entry));
  return entry;
}

SnapshotInfo Store::snapshot(const copilot::KnowledgeState& kb) {
  const auto existing = list_snapshots(files_);
  const std::uint64_t seq = existing.empty() ? 1 : existing.back().sequence + 1;
  auto data = kb.export_indexes();
  data.sequence = seq;
  data.source_lines = records_.lines();
  data.source_bytes = records_.size_bytes();
  char name[32];
  std::snprintf(name, sizeof name, "%06llu.afix", static_cast<unsigned long long>(seq));
  const auto path = files_.snapshots() / name;
  text::write_snapshot_file(path, data);
  fsync_dir(files_.snapshots());

  auto all = list_snapshots(files_);
  while (all.size() > retention_) {
    fs::remove(all.front().file);
    all.erase(all.begin());
  }
  return {seq, path, kb.size()};
}

void Store::save_session(const agent::AgentSession& session) {
  if (session.session_id.empty()) throw InvalidArgument("session without id");
  std::string body;
  for (const auto& step : session.steps) body += json{{"type", "step"}, {"step", step}}.dump() + "\n";
  json outcome = session;
  outcome.erase("steps");
  body += json{{"type", "session"}, {"session", outcome}}.dump() + "\n";

  const auto path = files_.session_file(session.session_id);
  const auto tmp = fs::path(path.string() + ".tmp");
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageError("open " + tmp.string() + ": " + errno_text());
  try {
    write_all(fd, body, tmp);
    if (::fsync(fd) != 0) throw StorageError("fsync " + tmp.string() + ": " + errno_text());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  fs::rename(tmp, path);
  fsync_dir(files_.sessions());
}

agent::AgentSession Store::load_session(const std::string& id) const {
  const auto path = files_.session_file(id);
  if (id.empty() || id.find('/') != std::string::npos || !fs::exists(path)) {
    throw NotFoundError("unknown session: " + id);
  }
  const auto contents = read_jsonl(path);
  std::vector<agent::AgentStep> steps;
  std::optional<agent::AgentSession> session;
  for (const auto& line : contents.lines) {
    const auto type = line.value.value("type", std::string());
    if (type == "step") {
      steps.push_back(decode_line<agent::AgentStep>({line.line_number, line.offset, line.value.at("step")}, path));
    } else if (type == "session") {
      session = decode_line<agent::AgentSession>({line.line_number, line.offset, line.value.at("session")}, path);
    } else {
      throw StorageError(path.filename().string() + ":" + std::to_string(line.line_number) + " malformed");
    }
  }
  if (!session) throw StorageError(path.filename().string() + ": missing session line");
  session->steps = std::move(steps);
  return *session;
}

std::vector<std::string> Store::session_ids() const {
  std::vector<std::string> out;
  if (!fs::is_directory(files_.sessions())) return out;
  for (const auto& entry : fs::directory_iterator(files_.sessions())) {
    if (entry.path().extension() == ".jsonl") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace smartaudit::store
