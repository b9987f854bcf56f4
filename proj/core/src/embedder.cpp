// SPDX-License-Identifier: Apache-2.0
#include "smartaudit/embedder.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>

#include "http_util.hpp"
#include "smartaudit/errors.hpp"
#include "smartaudit/hashing.hpp"
#include "smartaudit/text_index.hpp"

namespace smartaudit::llm {

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw InvalidArgument("embedding dimension must be positive");
}

std::vector<double> HashEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  const auto tokens = text::tokenize(text);
  const auto accumulate = [&](std::string_view feature) {
    const std::uint64_t h = fnv1a64(feature);
    const std::size_t bucket = h % dimension_;
    v[bucket] += ((h / dimension_) & 1U) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    accumulate(tokens[i]);
    if (i + 1 < tokens.size()) accumulate(tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v.assign(dimension_, 0.0);
    v[0] = 1.0;
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

HttpEmbedder::HttpEmbedder(std::string url, std::size_t dimension, std::chrono::milliseconds timeout,
                           int max_in_flight)
    : url_(std::move(url)), dimension_(dimension), timeout_(timeout), in_flight_(std::max(1, max_in_flight)) {
  detail::split_url(url_);
}

std::vector<double> HttpEmbedder::embed(std::string_view text) const {
  const auto target = detail::split_url(url_);
  const std::string body = nlohmann::json{{"input", std::string(text)}}.dump();
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    httplib::Client client(target.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    auto res = client.Post(target.path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (res->status != 200 || j.is_discarded() || !j.contains("vector") || !j["vector"].is_array()) {
      throw GatewayError(GatewayError::Kind::parse_failure, "embedding backend reply lacks a \"vector\" array");
    }
    std::vector<double> v;
    for (const auto& x : j["vector"]) {
      if (!x.is_number()) throw GatewayError(GatewayError::Kind::parse_failure, "non-numeric embedding entry");
      v.push_back(x.get<double>());
    }
    if (v.size() != dimension_) {
      throw GatewayError(GatewayError::Kind::schema_violation,
                         "embedding dimension " + std::to_string(v.size()) + ", expected " + std::to_string(dimension_));
    }
    return text::normalized(v);
  }
  throw GatewayError(GatewayError::Kind::unreachable, "embedding backend " + url_ + " failed after retry: " + last_error);
}

}  // namespace smartaudit::llm
