// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "smartaudit/engine.hpp"

namespace support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "smartaudit-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline fs::path fixtures_dir() { return SMARTAUDIT_FIXTURES_DIR; }
inline std::string auditctl() { return AUDITCTL_PATH; }

inline void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  return q + "'";
}

// Runs a shell command, capturing stdout and stderr separately.
inline CommandResult run(const std::string& command) {
  TempDir scratch;
  const auto out = scratch / "out";
  const auto err = scratch / "err";
  const std::string full = command + " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
  const int status = std::system(full.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// auditctl against a data directory.
inline CommandResult auditctl_run(const fs::path& data_dir, const std::string& args) {
  return run("AUDIT_DATA_DIR=" + shell_quote(data_dir.string()) + " " + shell_quote(auditctl()) + " " + args);
}

inline std::unique_ptr<smartaudit::Engine> open_engine(const fs::path& dir,
                                                       std::shared_ptr<smartaudit::llm::LlmBackend> backend = {},
                                                       smartaudit::store::LoadMode mode =
                                                           smartaudit::store::LoadMode::prefer_snapshot) {
  smartaudit::EngineOptions opts;
  opts.backend = std::move(backend);
  opts.load_mode = mode;
  opts.warn = [](const std::string&) {};
  return smartaudit::Engine::open(dir, smartaudit::Config{}, std::move(opts));
}

}  // namespace support
