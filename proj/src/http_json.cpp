#include "rhea/http_json.hpp"

#include <algorithm>
#include <thread>

#include "httplib.h"

namespace rhea {

Endpoint parse_endpoint(const std::string& url, const std::string& default_path) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidInput, "endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, default_path};
  std::string path = url.substr(path_start);
  if (path == "/") path = default_path;
  return {url.substr(0, path_start), path};
}

json post_json(const Endpoint& endpoint, const json& body, const RetryPolicy& policy,
               const std::vector<std::pair<std::string, std::string>>& headers) {
  httplib::Client client(endpoint.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  const std::string payload = body.dump();
  auto backoff = policy.initial_backoff;
  std::string last_error = "no attempt made";
  const int attempts = std::max(1, policy.attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(endpoint.path, hdrs, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::BackendUnavailable,
                  endpoint.base + endpoint.path + " returned HTTP " + std::to_string(res->status));
    } else {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("unparseable response body: ") + e.what());
      }
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(policy.max_backoff,
                         std::chrono::milliseconds(static_cast<long long>(backoff.count() * policy.backoff_factor)));
    }
  }
  throw Error(ErrorCode::BackendUnavailable, endpoint.base + endpoint.path + " failed after " +
                                                 std::to_string(attempts) + " attempts (" + last_error + ")");
}

}  // namespace rhea
