/*
 * Copyright 2026 The serp-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Live transport against a SERP API endpoint. Requests carry the query, the
// API key and the date window as the engine's custom date range parameter.

#ifndef SERP_AUDIT_SERP_HTTP_HPP_
#define SERP_AUDIT_SERP_HTTP_HPP_

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "serp_audit/serp_client.hpp"

namespace serp_audit {

struct HttpTransportConfig {
  std::string endpoint;  // e.g. https://serpapi.com/search
  std::string api_key;
  std::vector<std::string> proxies;  // host:port, used round-robin
  int results_per_page = 10;
  int timeout_seconds = 30;
};

// `${VAR}` resolves to the environment variable VAR; other values pass through.
inline std::string resolve_secret(const std::string& value) {
  if (value.size() > 3 && value.starts_with("${") && value.back() == '}') {
    const std::string name = value.substr(2, value.size() - 3);
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) throw ConfigError("environment variable " + name + " is not set");
    return v;
  }
  return value;
}

struct EndpointParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline EndpointParts split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("engine.endpoint must be an absolute URL");
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

// Google's custom date range: tbs=cdr:1,cd_min:M/D/YYYY,cd_max:M/D/YYYY
inline std::string google_date_range(const Date& from, const Date& to) {
  const auto md = [](const Date& d) {
    return std::to_string(static_cast<unsigned>(d.month())) + "/" +
           std::to_string(static_cast<unsigned>(d.day())) + "/" +
           std::to_string(static_cast<int>(d.year()));
  };
  return "cdr:1,cd_min:" + md(from) + ",cd_max:" + md(to);
}

inline httplib::Params live_request_params(const SerpRequest& req,
                                           const HttpTransportConfig& cfg) {
  httplib::Params params;
  params.emplace("engine", "google");
  params.emplace("q", req.spec.query());
  params.emplace("tbs", google_date_range(req.spec.date_from, req.spec.date_to));
  params.emplace("num", std::to_string(cfg.results_per_page));
  if (req.page > 0) params.emplace("start", std::to_string(req.page * cfg.results_per_page));
  params.emplace("api_key", cfg.api_key);
  // Repetitions must not be served from the provider's own cache.
  params.emplace("no_cache", "true");
  return params;
}

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(HttpTransportConfig cfg)
      : cfg_(std::move(cfg)), parts_(split_endpoint(cfg_.endpoint)) {}

  RawResponse send(const SerpRequest& request) override {
    httplib::Client client(parts_.origin);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_follow_location(true);
    if (!cfg_.proxies.empty()) {
      const auto& proxy = cfg_.proxies[next_proxy_++ % cfg_.proxies.size()];
      const auto colon = proxy.rfind(':');
      if (colon == std::string::npos) throw ConfigError("proxy must be host:port: " + proxy);
      client.set_proxy(proxy.substr(0, colon), std::stoi(proxy.substr(colon + 1)));
    }
    const auto path = httplib::append_query_params(parts_.path,
                                                   live_request_params(request, cfg_));
    auto res = client.Get(path);
    if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  HttpTransportConfig cfg_;
  EndpointParts parts_;
  std::atomic<std::size_t> next_proxy_{0};
};

}  // namespace serp_audit

#endif  // SERP_AUDIT_SERP_HTTP_HPP_
