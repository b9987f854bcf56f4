// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace smartaudit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Carries the complete list of violated invariants, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// A severity/occurrence/detection factor outside [1, 10].
class FactorOutOfRange : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class GatewayError : public Error {
 public:
  enum class Kind { unreachable, timeout, parse_failure, schema_violation, unknown_template };

  GatewayError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace smartaudit
