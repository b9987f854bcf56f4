// SPDX-License-Identifier: Apache-2.0
// auditctl: operator front end over the engine.
//
// Exit codes: 0 success, 1 domain error, 2 usage error (bad flags, missing
// or unparsable input files).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "smartaudit/api_server.hpp"
#include "smartaudit/engine.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/fixtures.hpp"
#include "smartaudit/json_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smartaudit;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string data_dir;
  std::string config;
  bool full_replay = false;
};

std::unique_ptr<Engine> open_engine(const Globals& g) {
  std::optional<fs::path> config_file;
  if (!g.config.empty()) {
    if (!fs::exists(g.config)) throw UsageError("config file not found: " + g.config);
    config_file = g.config;
  } else if (fs::exists(fs::path(g.data_dir) / "config.toml")) {
    config_file = fs::path(g.data_dir) / "config.toml";
  }
  Config config;
  try {
    config = load_config(config_file);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  EngineOptions opts;
  opts.load_mode = g.full_replay ? store::LoadMode::full_replay : store::LoadMode::prefer_snapshot;
  opts.warn = [](const std::string& w) { std::cerr << "warning: " << w << "\n"; };
  return Engine::open(g.data_dir, std::move(config), std::move(opts));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cell(std::string s, std::size_t width) {
  if (s.size() > width) s = s.substr(0, width - 1) + "~";
  s.resize(width, ' ');
  return s;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_plan(const Globals& g, const std::string& path, bool as_json, std::optional<std::size_t> top_n) {
  Checklist checklist;
  try {
    checklist = decode<Checklist>(parse_json_text(read_file(path), path), "checklist");
    if (auto p = checklist_problems(checklist); !p.empty()) throw ValidationError(p);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  } catch (const ValidationError& e) {
    throw UsageError(std::string("invalid checklist: ") + e.what());
  }
  auto engine = open_engine(g);
  const auto plan = engine->plan(checklist, top_n);
  if (as_json) {
    std::cout << json(plan).dump() << "\n";
    return 0;
  }
  std::cout << cell("item", 16) << cell("tier", 8) << cell("rpn", 6) << cell("sample", 8) << "critical\n";
  for (const auto& a : plan) {
    std::cout << cell(a.item_id, 16) << cell(std::string(risk::to_string(a.tier)), 8)
              << cell(std::to_string(a.rpn), 6) << cell(std::to_string(a.adjusted_sample_size), 8)
              << (a.critical ? "yes" : "") << "\n";
  }
  return 0;
}

int cmd_ingest(const Globals& g, const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot read " + path);
  { std::ifstream probe(path); if (!probe) throw UsageError("cannot read " + path); }
  auto engine = open_engine(g);
  std::cout << engine->ingest_file(path).line() << "\n";
  return 0;
}

int cmd_index_rebuild(Globals g) {
  g.full_replay = true;
  auto engine = open_engine(g);
  const auto info = engine->snapshot();
  std::cout << "snapshot " << info.sequence << " written with " << info.record_count << " records\n";
  return 0;
}

struct SearchArgs {
  std::string query;
  std::string mode = "hybrid";
  std::size_t k = 10;
  std::string supplier;
  std::vector<std::string> tags;
  std::string from, to;
  bool as_json = false;
};

int cmd_search(const Globals& g, const SearchArgs& a) {
  copilot::SearchFilters filters;
  copilot::SearchMode mode;
  try {
    mode = copilot::parse_search_mode(a.mode);
    if (!a.supplier.empty()) filters.supplier = a.supplier;
    filters.tags = a.tags;
    if (!a.from.empty()) filters.from = Date::parse(a.from);
    if (!a.to.empty()) filters.to = Date::parse(a.to);
    if (a.k == 0 || a.k > 100) throw InvalidArgument("k must be in [1, 100]");
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  auto engine = open_engine(g);
  const auto hits = engine->search(a.query, mode, a.k, filters);
  if (a.as_json) {
    std::cout << json(hits).dump() << "\n";
    return 0;
  }
  for (const auto& h : hits) {
    std::cout << h.rank << ". " << h.record_id << "  score " << fixed(h.score, 6) << "  bm25 " << fixed(h.bm25, 4)
              << "  semantic " << fixed(h.semantic, 4) << "\n   " << h.record.tuned_description << "\n";
  }
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& id, bool as_json) {
  auto engine = open_engine(g);
  const auto q = engine->evaluate(id);
  if (as_json) {
    std::cout << json(q).dump() << "\n";
  } else {
    std::cout << id << " overall " << q.overall << " (root cause depth " << q.root_cause_depth << ", causal chain "
              << q.causal_chain_validity << ", corrective action " << q.corrective_action_specificity
              << ", evidence " << q.evidence_support << ")\n";
  }
  return 0;
}

int cmd_agent(const Globals& g, const std::string& request, bool transcript, const std::string& parent) {
  auto engine = open_engine(g);
  agent::SessionOptions opts;
  opts.step_limit = engine->config().agent.step_limit;
  if (!parent.empty()) opts.parent_session_id = parent;
  if (transcript) {
    opts.on_step = [](const agent::AgentSession&, const agent::AgentStep& step) {
      std::cout << json(step).dump() << "\n" << std::flush;
    };
  }
  const auto session = engine->run_agent(request, opts);
  if (session.status != agent::SessionStatus::done || !session.final) {
    if (transcript) {
      std::cout << json{{"session_id", session.session_id}, {"status", agent::to_string(session.status)},
                        {"diagnostic", session.diagnostic}}
                       .dump()
                << "\n";
    }
    std::cerr << "agent session " << session.session_id << " failed: " << session.diagnostic << "\n";
    return 1;
  }
  if (transcript) {
    std::cout << json{{"session_id", session.session_id}, {"status", agent::to_string(session.status)},
                      {"final", *session.final}}
                     .dump()
              << "\n";
  } else {
    std::cout << session.final->report;
    if (session.final->report.empty() || session.final->report.back() != '\n') std::cout << "\n";
  }
  return 0;
}

int cmd_gen_fixtures(const fixtures::FixtureOptions& o, const std::string& out) {
  if (o.suppliers < 1) throw UsageError("--suppliers must be at least 1");
  const auto data = fixtures::generate(o);
  fixtures::write(data, out);
  std::cout << "wrote " << data.history.size() << " issues, " << data.audits.size() << " audits, "
            << data.checklist.items.size() << " checklist items, " << data.findings.size() << " findings to "
            << out << "\n";
  return 0;
}

api::ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Globals& g, std::string host, int port, std::string ui_dir) {
  auto engine = open_engine(g);
  const auto& cfg = engine->config().server;
  if (host.empty()) host = cfg.host;
  if (port < 0) port = cfg.port;
  api::ServerOptions opts;
  opts.agent_workers = engine->config().agent.workers;
  opts.ui_dir = ui_dir.empty() ? fs::path(cfg.ui_dir) : fs::path(ui_dir);
  api::ApiServer server(*engine, opts);
  const int bound = server.start(host, port);
  std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.wait();
  g_server = nullptr;
  server.drain_sessions();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart audit operator tool"};
  app.require_subcommand(1);

  Globals g;
  if (const char* env = std::getenv("AUDIT_DATA_DIR"); env && *env) {
    g.data_dir = env;
  } else {
    g.data_dir = "data";
  }
  app.add_option("--data-dir", g.data_dir, "Data directory (default $AUDIT_DATA_DIR or ./data)");
  app.add_option("--config", g.config, "config.toml path (default <data-dir>/config.toml)");
  app.add_flag("--full-replay", g.full_replay, "Ignore snapshots and replay the record log");

  std::string file;
  auto* ingest = app.add_subcommand("ingest", "Ingest raw findings (JSONL)");
  ingest->add_option("--file", file, "findings.jsonl")->required();

  auto* rebuild = app.add_subcommand("index-rebuild", "Rebuild indexes from the log and write a snapshot");

  std::string checklist;
  bool plan_json = false;
  std::optional<std::size_t> top_n;
  auto* plan = app.add_subcommand("plan", "Risk-assess a checklist");
  plan->add_option("--checklist", checklist, "Checklist JSON file")->required();
  plan->add_flag("--json", plan_json, "Print the raw assessment array");
  plan->add_option("--top-n", top_n, "Number of critical items");

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Search the knowledge base");
  search->add_option("query", sa.query, "Query text")->required();
  search->add_option("--mode", sa.mode, "bm25 | semantic | hybrid");
  search->add_option("--k", sa.k, "Number of hits");
  search->add_option("--supplier", sa.supplier);
  search->add_option("--tag", sa.tags, "Required tag (repeatable)");
  search->add_option("--from", sa.from, "YYYY-MM-DD");
  search->add_option("--to", sa.to, "YYYY-MM-DD");
  search->add_flag("--json", sa.as_json);

  std::string record_id;
  bool eval_json = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score a record's root-cause quality");
  evaluate->add_option("record_id", record_id)->required();
  evaluate->add_flag("--json", eval_json);

  std::string request, parent;
  bool transcript = false;
  auto* agent_cmd = app.add_subcommand("agent", "Run an agent session");
  agent_cmd->add_option("request", request, "Natural-language request")->required();
  agent_cmd->add_flag("--transcript", transcript, "Print each step as it completes");
  agent_cmd->add_option("--parent", parent, "Parent session id");

  fixtures::FixtureOptions fo;
  std::string out;
  auto* gen = app.add_subcommand("gen-fixtures", "Write deterministic synthetic data");
  gen->add_option("--seed", fo.seed);
  gen->add_option("--suppliers", fo.suppliers);
  gen->add_option("--issues", fo.issues);
  gen->add_option("--audits", fo.audits);
  gen->add_option("--out", out, "Output directory (default: data dir)");

  std::string host, ui_dir;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--ui-dir", ui_dir, "Static web UI directory served under /ui");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return cmd_ingest(g, file);
    if (*rebuild) return cmd_index_rebuild(g);
    if (*plan) return cmd_plan(g, checklist, plan_json, top_n);
    if (*search) return cmd_search(g, sa);
    if (*evaluate) return cmd_evaluate(g, record_id, eval_json);
    if (*agent_cmd) return cmd_agent(g, request, transcript, parent);
    if (*gen) return cmd_gen_fixtures(fo, out.empty() ? g.data_dir : out);
    if (*serve) return cmd_serve(g, host, port, ui_dir);
  } catch (const UsageError& e) {
    std::cerr << "auditctl: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "auditctl: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
