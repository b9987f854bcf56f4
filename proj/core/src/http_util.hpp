// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "smartaudit/errors.hpp"

namespace smartaudit::detail {

// "http://host:port/path" -> {"http://host:port", "/path"}
struct SplitUrl {
  std::string origin;
  std::string path;
};

inline SplitUrl split_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) throw InvalidArgument("url without scheme: " + std::string(url));
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

}  // namespace smartaudit::detail
