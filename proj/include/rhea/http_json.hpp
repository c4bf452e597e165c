#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "rhea/codec.hpp"

namespace rhea {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_backoff{2000};
  std::chrono::milliseconds timeout{30000};
};

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

/// Splits "http://host:8080/v1/embed" into base and path. A URL without a
/// path gets `default_path`.
Endpoint parse_endpoint(const std::string& url, const std::string& default_path = "/");

/// POSTs a JSON body and returns the parsed JSON response. Connection errors,
/// 429 and 5xx are retried with exponential backoff; anything else, or the
/// final failed attempt, throws Error(BackendUnavailable).
json post_json(const Endpoint& endpoint, const json& body, const RetryPolicy& policy,
               const std::vector<std::pair<std::string, std::string>>& headers = {});

}  // namespace rhea
