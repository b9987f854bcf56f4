// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "smartaudit/copilot.hpp"
#include "smartaudit/risk_engine.hpp"
#include "smartaudit/text_index.hpp"

namespace smartaudit {

struct LlmSettings {
  std::string backend = "mock";  // mock | http
  std::string url;
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 4;
  // Mock fixture file; relative paths resolve against the data directory.
  std::string fixtures = "llm_fixtures.jsonl";
};

struct EmbedSettings {
  std::string backend = "mock";  // mock | http
  std::string url;
  std::size_t dimension = 64;
  std::chrono::milliseconds timeout{30000};
};

struct AgentSettings {
  int step_limit = 8;
  int workers = 4;
};

struct StoreSettings {
  std::size_t snapshot_retention = 2;
};

struct ServerSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;  // static files served under /ui; empty disables
};

struct Config {
  risk::RiskConfig risk;
  copilot::CopilotConfig copilot;
  text::Bm25Params bm25;
  LlmSettings llm;
  EmbedSettings embed;
  AgentSettings agent;
  StoreSettings store;
  ServerSettings server;
};

using EnvLookup = std::function<std::optional<std::string>(const char* name)>;

// Process environment.
std::optional<std::string> getenv_lookup(const char* name);

// Parses TOML text. Unknown keys are ignored; wrongly typed or out-of-range
// values throw InvalidArgument naming the key.
Config parse_config(std::string_view toml_text, const std::string& source = "config.toml");

// File (when present) then AUDIT_* environment overrides.
Config load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = getenv_lookup);

void apply_env(Config& config, const EnvLookup& env);

std::string to_toml(const Config& config);

}  // namespace smartaudit
