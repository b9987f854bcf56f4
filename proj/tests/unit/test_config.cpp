// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>

#include "smartaudit/config.hpp"
#include "smartaudit/errors.hpp"

using namespace smartaudit;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const char* name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST(Config, DefaultsWhenEmpty) {
  const auto c = parse_config("");
  EXPECT_EQ(c.risk.tier_high, 200);
  EXPECT_EQ(c.risk.top_n, 5u);
  EXPECT_DOUBLE_EQ(c.bm25.k1, 1.2);
  EXPECT_EQ(c.copilot.hybrid.rrf_k0, 60u);
  EXPECT_EQ(c.agent.step_limit, 8);
  EXPECT_EQ(c.agent.workers, 4);
  EXPECT_EQ(c.llm.backend, "mock");
}

TEST(Config, ReadsSections) {
  const auto c = parse_config(R"(
[risk]
tier_high = 300
link_threshold = 0.5
[index]
rrf_k0 = 10
[agent]
step_limit = 4
[server]
port = 9090
)");
  EXPECT_EQ(c.risk.tier_high, 300);
  EXPECT_DOUBLE_EQ(c.risk.link_threshold, 0.5);
  EXPECT_EQ(c.copilot.hybrid.rrf_k0, 10u);
  EXPECT_EQ(c.agent.step_limit, 4);
  EXPECT_EQ(c.server.port, 9090);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config("[risk]\ntier_high = 10\ntier_medium = 80\n"), InvalidArgument);
  EXPECT_THROW(parse_config("[llm]\nbackend = \"magic\"\n"), InvalidArgument);
  EXPECT_THROW(parse_config("[risk\n"), InvalidArgument);
  EXPECT_THROW(parse_config("[risk]\ntier_high = \"high\"\n"), InvalidArgument);
}

TEST(Config, EnvironmentOverrides) {
  Config c;
  apply_env(c, env_of({{"AUDIT_LLM_BACKEND", "http"}, {"AUDIT_LLM_URL", "http://127.0.0.1:9/v1"},
                       {"AUDIT_LLM_API_KEY", "secret"}}));
  EXPECT_EQ(c.llm.backend, "http");
  EXPECT_EQ(c.llm.api_key, "secret");
  EXPECT_EQ(to_toml(c).find("secret"), std::string::npos);
}

TEST(Config, TomlRoundTrip) {
  Config c;
  c.risk.tier_high = 250;
  c.server.port = 1234;
  const auto back = parse_config(to_toml(c));
  EXPECT_EQ(back.risk.tier_high, 250);
  EXPECT_EQ(back.server.port, 1234);
}
