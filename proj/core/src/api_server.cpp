// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/api_server.hpp"

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "smartaudit/errors.hpp"
#include "smartaudit/json_io.hpp"

namespace smartaudit::api {

using nlohmann::json;

json to_json(const ApiError& e) {
  return json{{"code", e.code}, {"message", e.message}, {"details", e.details}};
}

ApiError classify_exception(std::exception_ptr error) {
  try {
    std::rethrow_exception(error);
  } catch (const FactorOutOfRange& e) {
    return {422, "factor_out_of_range", e.what(), nullptr};
  } catch (const ValidationError& e) {
    return {400, "validation_failed", e.what(), json{{"problems", e.problems()}}};
  } catch (const NotFoundError& e) {
    return {404, "not_found", e.what(), nullptr};
  } catch (const InvalidArgument& e) {
    return {400, "invalid_argument", e.what(), nullptr};
  } catch (const GatewayError& e) {
    return {502, "gateway_failure", e.what(), nullptr};
  } catch (const StorageError& e) {
    return {500, "storage_failure", e.what(), nullptr};
  } catch (const std::exception& e) {
    return {500, "internal", e.what(), nullptr};
  } catch (...) {
    return {500, "internal", "unknown error", nullptr};
  }
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const ApiError& e) { send_json(res, e.status, to_json(e)); }

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (...) {
    send_error(res, classify_exception(std::current_exception()));
  }
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw ApiError{400, "invalid_json", "request body is not valid JSON", nullptr};
  return body;
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

copilot::SearchFilters query_filters(const httplib::Request& req) {
  copilot::SearchFilters f;
  if (auto s = param(req, "supplier"); s && !s->empty()) f.supplier = *s;
  const auto n = req.get_param_value_count("tag");
  for (std::size_t i = 0; i < n; ++i) {
    const auto tag = req.get_param_value("tag", i);
    if (!tag.empty()) f.tags.push_back(tag);
  }
  for (const char* key : {"from", "to"}) {
    auto v = param(req, key);
    if (!v || v->empty()) continue;
    auto d = Date::try_parse(*v);
    if (!d) throw ApiError{400, "bad_date", std::string(key) + " is not a YYYY-MM-DD date: " + *v, nullptr};
    (std::string(key) == "from" ? f.from : f.to) = *d;
  }
  if (f.from && f.to && *f.to < *f.from) throw ApiError{400, "bad_date", "to is before from", nullptr};
  return f;
}

std::string sse_event(const char* name, const json& data, std::optional<int> id = std::nullopt) {
  std::string out = std::string("event: ") + name + "\n";
  if (id) out += "id: " + std::to_string(*id) + "\n";
  out += "data: " + data.dump() + "\n\n";
  return out;
}

json session_outcome(const agent::AgentSession& s) {
  json j = s;
  j.erase("steps");
  j["step_count"] = s.steps.size();
  return j;
}

struct LiveSession {
  std::mutex mutex;
  std::condition_variable cv;
  std::vector<agent::AgentStep> steps;
  std::optional<agent::AgentSession> done;
};

class WorkerPool {
 public:
  explicit WorkerPool(int n) {
    for (int i = 0; i < std::max(1, n); ++i) threads_.emplace_back([this] { loop(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  void submit(std::function<void()> job) {
    {
      std::lock_guard lock(mutex_);
      jobs_.push_back(std::move(job));
      ++pending_;
    }
    cv_.notify_one();
  }
  void drain() {
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [&] { return pending_ == 0; });
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
      {
        std::lock_guard lock(mutex_);
        --pending_;
      }
      idle_.notify_all();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_;
  std::deque<std::function<void()>> jobs_;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace

struct ApiServer::Impl {
  Engine& engine;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  std::mutex live_mutex;
  std::map<std::string, std::shared_ptr<LiveSession>> live;
  WorkerPool pool;

  Impl(Engine& e, ServerOptions o) : engine(e), options(std::move(o)), pool(options.agent_workers) { routes(); }

  std::shared_ptr<LiveSession> find_live(const std::string& id) {
    std::lock_guard lock(live_mutex);
    auto it = live.find(id);
    return it == live.end() ? nullptr : it->second;
  }

  void routes();
  void start_session(const httplib::Request& req, httplib::Response& res);
  void stream_events(const std::string& id, httplib::Response& res);
};

void ApiServer::Impl::routes() {
  auto wrap = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ApiError& e) {
        send_error(res, e);
      } catch (...) {
        send_error(res, classify_exception(std::current_exception()));
      }
    };
  };

  server.Get("/api/v1/health", wrap([this](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, json{{"status", "ok"}, {"records", engine.knowledge()->size()}});
             }));

  server.Post("/api/v1/audits/plan", wrap([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                const json& cl = body.contains("checklist") ? body["checklist"] : body;
                Checklist checklist;
                try {
                  checklist = decode<Checklist>(cl, "checklist");
                } catch (const InvalidArgument& e) {
                  throw ApiError{400, "invalid_checklist", e.what(), nullptr};
                }
                std::optional<std::size_t> top_n;
                if (auto it = body.find("options"); it != body.end() && it->is_object() && it->contains("top_n")) {
                  const auto& v = (*it)["top_n"];
                  if (!v.is_number_unsigned()) throw ApiError{400, "invalid_checklist", "options.top_n must be >= 0", nullptr};
                  top_n = v.get<std::size_t>();
                }
                try {
                  send_json(res, 200, json(engine.plan(checklist, top_n)));
                } catch (const ValidationError& e) {
                  throw ApiError{400, "invalid_checklist", e.what(), json{{"problems", e.problems()}}};
                }
              }));

  server.Post("/api/v1/findings", wrap([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                copilot::RawFinding raw;
                try {
                  raw = decode<copilot::RawFinding>(body, "finding");
                } catch (const InvalidArgument& e) {
                  throw ApiError{400, "invalid_finding", e.what(), nullptr};
                }
                if (canonicalize(raw.free_text).empty()) {
                  throw ApiError{400, "empty_text", "free_text is empty", nullptr};
                }
                const auto result = engine.submit_finding(raw);
                if (result.status == FindingStatus::quarantined && result.gateway_failure) {
                  throw ApiError{502, "gateway_failure", result.quarantine->reason,
                                 json{{"quarantine_id", result.quarantine->id}}};
                }
                send_json(res, result.status == FindingStatus::quarantined ? 202 : 200, to_json(result));
              }));

  server.Get("/api/v1/search", wrap([this](const httplib::Request& req, httplib::Response& res) {
               copilot::SearchMode mode = copilot::SearchMode::hybrid;
               if (auto m = param(req, "mode"); m && !m->empty()) {
                 try {
                   mode = copilot::parse_search_mode(*m);
                 } catch (const InvalidArgument& e) {
                   throw ApiError{400, "unknown_mode", e.what(), nullptr};
                 }
               }
               std::size_t k = 10;
               if (auto kv = param(req, "k"); kv && !kv->empty()) {
                 std::size_t used = 0;
                 long long v = -1;
                 try {
                   v = std::stoll(*kv, &used);
                 } catch (const std::exception&) {
                   used = 0;
                 }
                 if (used != kv->size() || v < 0 || v > 100) {
                   throw ApiError{400, "invalid_k", "k must be an integer in [0,100]", nullptr};
                 }
                 k = static_cast<std::size_t>(v);
               }
               const auto filters = query_filters(req);
               send_json(res, 200, json(engine.search(param(req, "q").value_or(""), mode, k, filters)));
             }));

  server.Post("/api/v1/evaluate", wrap([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                if (!body.is_object() || !body.contains("record_id") || !body["record_id"].is_string()) {
                  throw ApiError{400, "invalid_argument", "record_id must be a string", nullptr};
                }
                send_json(res, 200, json(engine.evaluate(body["record_id"].get<std::string>())));
              }));

  server.Get(R"(/api/v1/suppliers/([^/]+)/scorecard)",
             wrap([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, json(engine.scorecard(req.matches[1].str())));
             }));

  server.Get(R"(/api/v1/records/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, json(engine.knowledge()->record(req.matches[1].str())));
             }));

  server.Get("/api/v1/stats/commonality", wrap([this](const httplib::Request& req, httplib::Response& res) {
               agent::GroupBy g = agent::GroupBy::tag;
               if (auto v = param(req, "group_by"); v && !v->empty()) {
                 try {
                   g = agent::parse_group_by(*v);
                 } catch (const InvalidArgument& e) {
                   throw ApiError{400, "unknown_group_by", e.what(), nullptr};
                 }
               }
               send_json(res, 200, json(engine.commonality(g, query_filters(req))));
             }));

  server.Get("/api/v1/stats/trend", wrap([this](const httplib::Request& req, httplib::Response& res) {
               if (auto b = param(req, "bucket"); b && !b->empty() && *b != "month") {
                 throw ApiError{400, "invalid_argument", "bucket must be month", nullptr};
               }
               send_json(res, 200, json(engine.trend(query_filters(req))));
             }));

  server.Post("/api/v1/agent/sessions",
              wrap([this](const httplib::Request& req, httplib::Response& res) { start_session(req, res); }));

  server.Get(R"(/api/v1/agent/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1].str();
               if (auto l = find_live(id)) {
                 std::lock_guard lock(l->mutex);
                 if (l->done) {
                   send_json(res, 200, json(*l->done));
                 } else {
                   send_json(res, 200, json{{"session_id", id}, {"status", "running"}, {"steps", l->steps}});
                 }
                 return;
               }
               send_json(res, 200, json(engine.session(id)));
             }));

  server.Get(R"(/api/v1/agent/sessions/([^/]+)/events)",
             wrap([this](const httplib::Request& req, httplib::Response& res) {
               stream_events(req.matches[1].str(), res);
             }));

  if (!options.ui_dir.empty() && std::filesystem::is_directory(options.ui_dir)) {
    server.set_mount_point("/ui", options.ui_dir.string());
  }

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    send_error(res, ApiError{res.status, res.status == 404 ? "not_found" : "http_error",
                             "no route for " + req.method + " " + req.path, nullptr});
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    send_error(res, classify_exception(ep));
  });
}

void ApiServer::Impl::start_session(const httplib::Request& req, httplib::Response& res) {
  const json body = parse_body(req);
  if (!body.is_object() || !body.contains("request") || !body["request"].is_string()) {
    throw ApiError{400, "invalid_argument", "request must be a string", nullptr};
  }
  const std::string request = body["request"].get<std::string>();
  if (canonicalize(request).empty()) throw ApiError{400, "empty_request", "request is empty", nullptr};
  std::optional<std::string> parent;
  if (auto it = body.find("parent_session_id"); it != body.end() && it->is_string()) {
    parent = it->get<std::string>();
    if (!find_live(*parent)) engine.session(*parent);  // 404 when unknown
  }

  agent::SessionOptions opts;
  opts.session_id = engine.next_session_id();
  opts.parent_session_id = parent;
  opts.step_limit = engine.config().agent.step_limit;
  auto state = std::make_shared<LiveSession>();
  {
    std::lock_guard lock(live_mutex);
    live[opts.session_id] = state;
  }
  opts.on_step = [state](const agent::AgentSession&, const agent::AgentStep& step) {
    {
      std::lock_guard lock(state->mutex);
      state->steps.push_back(step);
    }
    state->cv.notify_all();
  };
  pool.submit([this, state, opts, request] {
    agent::AgentSession outcome;
    try {
      outcome = engine.run_agent(request, opts);
    } catch (const std::exception& e) {
      outcome.session_id = opts.session_id;
      outcome.parent_session_id = opts.parent_session_id;
      outcome.request = request;
      outcome.status = agent::SessionStatus::failed;
      outcome.diagnostic = e.what();
      std::lock_guard lock(state->mutex);
      outcome.steps = state->steps;
    }
    {
      std::lock_guard lock(state->mutex);
      state->done = std::move(outcome);
    }
    state->cv.notify_all();
  });
  send_json(res, 202, json{{"session_id", opts.session_id}, {"status", "running"}});
}

void ApiServer::Impl::stream_events(const std::string& id, httplib::Response& res) {
  auto state = find_live(id);
  if (!state) {
    const auto session = engine.session(id);
    std::string body;
    for (const auto& s : session.steps) body += sse_event("step", s, s.index);
    body += sse_event("final", session_outcome(session));
    res.status = 200;
    res.set_header("Cache-Control", "no-cache");
    res.set_content(body, "text/event-stream");
    return;
  }
  auto cursor = std::make_shared<std::size_t>(0);
  res.set_header("Cache-Control", "no-cache");
  res.set_chunked_content_provider("text/event-stream", [state, cursor](std::size_t, httplib::DataSink& sink) {
    std::unique_lock lock(state->mutex);
    state->cv.wait_for(lock, std::chrono::milliseconds(250),
                       [&] { return state->steps.size() > *cursor || state->done.has_value(); });
    std::string chunk;
    while (*cursor < state->steps.size()) {
      const auto& s = state->steps[*cursor];
      chunk += sse_event("step", s, s.index);
      ++*cursor;
    }
    const bool finished = state->done.has_value() && *cursor >= state->done->steps.size();
    if (finished) chunk += sse_event("final", session_outcome(*state->done));
    lock.unlock();
    if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
    if (finished) {
      sink.done();
      return true;
    }
    return sink.is_writable();
  });
}

ApiServer::ApiServer(Engine& engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(engine, std::move(options))) {}

ApiServer::~ApiServer() {
  stop();
}

int ApiServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw StorageError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ApiServer::drain_sessions() { impl_->pool.drain(); }

}  // namespace smartaudit::api
