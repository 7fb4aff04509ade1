#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <regex>

#include "w2w/detail/http.hpp"
#include "w2w/errors.hpp"

namespace w2w::detail {

HttpResult post_json(const std::string& url, const Headers& headers, const std::string& body,
                     std::chrono::milliseconds timeout) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, url_re)) throw TransportError("malformed endpoint URL '" + url + "'");
  const std::string origin = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers hs;
  for (const auto& [k, v] : headers) hs.emplace(k, v);
  auto res = client.Post(path, hs, body, "application/json");
  if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
  return HttpResult{res->status, res->body};
}

}  // namespace w2w::detail
