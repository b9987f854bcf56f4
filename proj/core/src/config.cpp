// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "smartaudit/errors.hpp"

namespace smartaudit {

namespace {

template <typename T>
void read(const toml::table& root, std::string_view path, T& target) {
  const auto node = root.at_path(path);
  if (!node) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node.value<double>()) {
      target = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node.as_boolean()) {
      target = v->get();
      return;
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = node.as_integer()) {
      if (v->get() < 0 && std::is_unsigned_v<T>) throw InvalidArgument(std::string(path) + " must be >= 0");
      target = static_cast<T>(v->get());
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node.as_string()) {
      target = v->get();
      return;
    }
  } else if constexpr (std::is_same_v<T, std::chrono::milliseconds>) {
    if (auto v = node.as_integer()) {
      target = std::chrono::milliseconds(v->get());
      return;
    }
  }
  throw InvalidArgument("config key " + std::string(path) + " has the wrong type");
}

void check(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("config: " + what);
}

void validate(const Config& c) {
  check(c.risk.tier_high > c.risk.tier_medium && c.risk.tier_medium >= 1, "risk thresholds must satisfy 1 <= medium < high");
  check(c.risk.multiplier_high > 0 && c.risk.multiplier_medium > 0 && c.risk.multiplier_low > 0,
        "risk multipliers must be positive");
  check(c.risk.link_threshold >= 0 && c.risk.link_threshold <= 1, "risk.link_threshold must be in [0,1]");
  check(c.risk.blend_weight >= 0 && c.risk.blend_weight <= 1, "risk.blend_weight must be in [0,1]");
  check(c.risk.train.epochs >= 0 && c.risk.train.learning_rate > 0, "risk.train needs epochs >= 0 and learning_rate > 0");
  check(c.copilot.cod_rounds >= 1 && c.copilot.cod_rounds <= 3, "copilot.cod_rounds must be in [1,3]");
  check(c.copilot.cod_max_tokens >= 1, "copilot.cod_max_tokens must be >= 1");
  check(c.bm25.k1 >= 0 && c.bm25.b >= 0 && c.bm25.b <= 1, "index.bm25 parameters out of range");
  check(c.copilot.hybrid.rrf_k0 >= 1, "index.rrf_k0 must be >= 1");
  check(c.llm.backend == "mock" || c.llm.backend == "http", "llm.backend must be mock or http");
  check(c.embed.backend == "mock" || c.embed.backend == "http", "embed.backend must be mock or http");
  check(c.embed.dimension >= 1, "embed.dimension must be >= 1");
  check(c.agent.step_limit >= 1 && c.agent.workers >= 1, "agent.step_limit and agent.workers must be >= 1");
  check(c.llm.max_in_flight >= 1, "llm.max_in_flight must be >= 1");
}

}  // namespace

std::optional<std::string> getenv_lookup(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

Config parse_config(std::string_view toml_text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw InvalidArgument(msg.str());
  }
  Config c;
  read(root, "risk.tier_high", c.risk.tier_high);
  read(root, "risk.tier_medium", c.risk.tier_medium);
  read(root, "risk.multiplier_high", c.risk.multiplier_high);
  read(root, "risk.multiplier_medium", c.risk.multiplier_medium);
  read(root, "risk.multiplier_low", c.risk.multiplier_low);
  read(root, "risk.link_threshold", c.risk.link_threshold);
  read(root, "risk.max_links", c.risk.max_links);
  read(root, "risk.blend_weight", c.risk.blend_weight);
  read(root, "risk.top_n", c.risk.top_n);
  read(root, "risk.recommend_neighbours", c.risk.recommend_neighbours);
  read(root, "risk.recency_scale_days", c.risk.recency_scale_days);
  read(root, "risk.learning_rate", c.risk.train.learning_rate);
  read(root, "risk.epochs", c.risk.train.epochs);

  read(root, "index.bm25_k1", c.bm25.k1);
  read(root, "index.bm25_b", c.bm25.b);
  read(root, "index.rrf_k0", c.copilot.hybrid.rrf_k0);
  read(root, "index.candidate_multiplier", c.copilot.hybrid.candidate_multiplier);
  read(root, "index.min_candidate_depth", c.copilot.hybrid.min_candidate_depth);

  read(root, "copilot.cod_rounds", c.copilot.cod_rounds);
  read(root, "copilot.cod_max_tokens", c.copilot.cod_max_tokens);
  read(root, "copilot.near_duplicate_threshold", c.copilot.near_duplicate_threshold);

  read(root, "llm.backend", c.llm.backend);
  read(root, "llm.url", c.llm.url);
  read(root, "llm.api_key", c.llm.api_key);
  read(root, "llm.timeout_ms", c.llm.timeout);
  read(root, "llm.max_in_flight", c.llm.max_in_flight);
  read(root, "llm.fixtures", c.llm.fixtures);

  read(root, "embed.backend", c.embed.backend);
  read(root, "embed.url", c.embed.url);
  read(root, "embed.dimension", c.embed.dimension);
  read(root, "embed.timeout_ms", c.embed.timeout);

  read(root, "agent.step_limit", c.agent.step_limit);
  read(root, "agent.workers", c.agent.workers);
  read(root, "store.snapshot_retention", c.store.snapshot_retention);
  read(root, "server.host", c.server.host);
  read(root, "server.port", c.server.port);
  read(root, "server.ui_dir", c.server.ui_dir);
  validate(c);
  return c;
}

void apply_env(Config& c, const EnvLookup& env) {
  if (auto v = env("AUDIT_LLM_BACKEND")) c.llm.backend = *v;
  if (auto v = env("AUDIT_LLM_URL")) c.llm.url = *v;
  if (auto v = env("AUDIT_LLM_API_KEY")) c.llm.api_key = *v;
  if (auto v = env("AUDIT_LLM_FIXTURES")) c.llm.fixtures = *v;
  if (auto v = env("AUDIT_EMBED_BACKEND")) c.embed.backend = *v;
  if (auto v = env("AUDIT_EMBED_URL")) c.embed.url = *v;
  validate(c);
}

Config load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  Config c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw InvalidArgument("cannot read config file " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    c = parse_config(ss.str(), file->string());
  }
  apply_env(c, env);
  return c;
}

std::string to_toml(const Config& c) {
  toml::table root{
      {"risk", toml::table{{"tier_high", c.risk.tier_high},
                           {"tier_medium", c.risk.tier_medium},
                           {"multiplier_high", c.risk.multiplier_high},
                           {"multiplier_medium", c.risk.multiplier_medium},
                           {"multiplier_low", c.risk.multiplier_low},
                           {"link_threshold", c.risk.link_threshold},
                           {"max_links", static_cast<std::int64_t>(c.risk.max_links)},
                           {"blend_weight", c.risk.blend_weight},
                           {"top_n", static_cast<std::int64_t>(c.risk.top_n)},
                           {"recommend_neighbours", static_cast<std::int64_t>(c.risk.recommend_neighbours)},
                           {"recency_scale_days", c.risk.recency_scale_days},
                           {"learning_rate", c.risk.train.learning_rate},
                           {"epochs", c.risk.train.epochs}}},
      {"index", toml::table{{"bm25_k1", c.bm25.k1},
                            {"bm25_b", c.bm25.b},
                            {"rrf_k0", static_cast<std::int64_t>(c.copilot.hybrid.rrf_k0)},
                            {"candidate_multiplier", static_cast<std::int64_t>(c.copilot.hybrid.candidate_multiplier)},
                            {"min_candidate_depth", static_cast<std::int64_t>(c.copilot.hybrid.min_candidate_depth)}}},
      {"copilot", toml::table{{"cod_rounds", c.copilot.cod_rounds},
                              {"cod_max_tokens", c.copilot.cod_max_tokens},
                              {"near_duplicate_threshold", c.copilot.near_duplicate_threshold}}},
      {"llm", toml::table{{"backend", c.llm.backend},
                          {"url", c.llm.url},
                          {"timeout_ms", static_cast<std::int64_t>(c.llm.timeout.count())},
                          {"max_in_flight", c.llm.max_in_flight},
                          {"fixtures", c.llm.fixtures}}},
      {"embed", toml::table{{"backend", c.embed.backend},
                            {"url", c.embed.url},
                            {"dimension", static_cast<std::int64_t>(c.embed.dimension)},
                            {"timeout_ms", static_cast<std::int64_t>(c.embed.timeout.count())}}},
      {"agent", toml::table{{"step_limit", c.agent.step_limit}, {"workers", c.agent.workers}}},
      {"store", toml::table{{"snapshot_retention", static_cast<std::int64_t>(c.store.snapshot_retention)}}},
      {"server", toml::table{{"host", c.server.host}, {"port", c.server.port}, {"ui_dir", c.server.ui_dir}}},
  };
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

}  // namespace smartaudit
