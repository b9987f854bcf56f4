// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace smartaudit::llm {

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Unit-norm vector of dimension() entries; deterministic per input.
  virtual std::vector<double> embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const noexcept = 0;
  virtual std::string backend_name() const = 0;
};

// Signed feature hashing of tokens and adjacent token bigrams.
// bucket = fnv1a64(feature) mod d; the sign comes from the parity of
// fnv1a64(feature) / d so it is independent of the bucket. Empty input (or a
// fully cancelled accumulator) maps to e1.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dimension = 64);

  std::vector<double> embed(std::string_view text) const override;
  std::size_t dimension() const noexcept override { return dimension_; }
  std::string backend_name() const override { return "mock"; }

 private:
  std::size_t dimension_;
};

// POST {"input"} -> {"vector"}; the result is normalized locally.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string url, std::size_t dimension, std::chrono::milliseconds timeout = std::chrono::seconds(30),
               int max_in_flight = 4);

  std::vector<double> embed(std::string_view text) const override;
  std::size_t dimension() const noexcept override { return dimension_; }
  std::string backend_name() const override { return "http"; }

 private:
  std::string url_;
  std::size_t dimension_;
  std::chrono::milliseconds timeout_;
  mutable std::counting_semaphore<1024> in_flight_;
};

}  // namespace smartaudit::llm
