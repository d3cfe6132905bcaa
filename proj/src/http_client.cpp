// Copyright 2026 The tutorrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tutorrag/http_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "tutorrag/error.hpp"

namespace tutorrag {

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry, double unit_random) const {
  const double exp = std::ldexp(1.0, std::max(0, retry - 1));
  const double capped =
      std::min(static_cast<double>(max_delay.count()), static_cast<double>(base_delay.count()) * exp);
  const double factor = 1.0 + jitter * (2.0 * std::clamp(unit_random, 0.0, 1.0) - 1.0);
  return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, capped * factor)));
}

Url parse_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "URL has no scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidArgument, "unsupported URL scheme: " + std::string(scheme));
  }
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  Url out;
  out.origin = std::string(url.substr(0, scheme_end + 3)) + std::string(rest.substr(0, slash));
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (rest.substr(0, slash).empty()) {
    throw Error(ErrorCode::InvalidArgument, "URL has no host: " + std::string(url));
  }
  return out;
}

std::string read_api_key(std::string_view env_name) {
  if (env_name.empty()) throw Error(ErrorCode::AuthError, "no API key variable configured");
  const char* value = std::getenv(std::string(env_name).c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorCode::AuthError, "environment variable " + std::string(env_name) + " is not set");
  }
  return value;
}

namespace {

double unit_random() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::string post_json(std::string_view url, const std::string& body, const std::string& bearer,
                      const PostOptions& options) {
  const Url target = parse_url(url);
  const int attempts = std::max(1, options.retry.attempts);
  std::string last_failure;

  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(options.retry.delay_before_retry(attempt - 1, unit_random()));
    }
    if (options.before_attempt) options.before_attempt();

    httplib::Client client(target.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

    auto res = client.Post(target.path, headers, body, "application/json");
    if (!res) {
      last_failure = "request to " + target.origin + target.path + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::AuthError,
                  "upstream rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_failure = "upstream returned HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw Error(ErrorCode::TransportError, last_failure);
}

}  // namespace tutorrag
