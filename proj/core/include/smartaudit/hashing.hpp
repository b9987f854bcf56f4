// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace smartaudit {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a. Stable across platforms; used wherever a cheap
// deterministic digest is enough.
constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace smartaudit
