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

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace tutorrag {

// Capped exponential backoff with multiplicative jitter. Delay before retry n
// (1-based) is min(max_delay, base_delay * 2^(n-1)) * (1 +/- jitter).
struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{250};
  std::chrono::milliseconds max_delay{4000};
  double jitter = 0.2;

  std::chrono::milliseconds delay_before_retry(int retry, double unit_random) const;
  bool operator==(const RetryPolicy&) const = default;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

// Throws InvalidArgument for anything but http(s)://host[:port][/path].
Url parse_url(std::string_view url);

// Reads the key from the named environment variable. Throws AuthError when
// unset or empty; the message names the variable, never the value.
std::string read_api_key(std::string_view env_name);

struct PostOptions {
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  // Called before every attempt (rate limiting, concurrency caps).
  std::function<void()> before_attempt;
};

// POSTs JSON with a bearer token and returns the 2xx body.
// 401/403 -> AuthError (not retried). Connection failures, 408, 429 and 5xx
// are retried per policy, then TransportError. Other statuses are
// TransportError immediately.
std::string post_json(std::string_view url, const std::string& body, const std::string& bearer,
                      const PostOptions& options);

}  // namespace tutorrag
