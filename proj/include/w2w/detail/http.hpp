#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace w2w::detail {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResult {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to an http:// or https:// URL. Connection-level failures
// raise TransportError; any HTTP status is returned to the caller.
HttpResult post_json(const std::string& url, const Headers& headers, const std::string& body,
                     std::chrono::milliseconds timeout);

}  // namespace w2w::detail
