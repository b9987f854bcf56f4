// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <string>

#include "smartaudit/engine.hpp"

namespace smartaudit::api {

struct ApiError {
  int status = 500;
  std::string code;
  std::string message;
  nlohmann::json details;  // null when absent
};

nlohmann::json to_json(const ApiError& e);

// Maps engine exceptions onto HTTP statuses and error codes.
ApiError classify_exception(std::exception_ptr error);

struct ServerOptions {
  int agent_workers = 4;
  std::filesystem::path ui_dir;  // served under /ui when it exists
};

// HTTP adapter over an Engine. Bodies are the JSON of the engine results,
// so a response equals the direct call's serialization byte for byte.
class ApiServer {
 public:
  ApiServer(Engine& engine, ServerOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and serves on a background thread. port 0 picks a free port.
  // Returns the bound port; throws StorageError when binding fails.
  int start(const std::string& host, int port);
  // Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

  // Waits until every queued agent session has finished.
  void drain_sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace smartaudit::api
