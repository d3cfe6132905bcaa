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
#include <mutex>
#include <string>
#include <unordered_map>

namespace tutorrag {

struct RateLimit {
  int requests_per_minute = 60;
  int burst = 10;

  bool operator==(const RateLimit&) const = default;
};

struct RateDecision {
  bool allowed = false;
  // Seconds until a token is available; 0 when allowed.
  double retry_after_s = 0.0;
};

// Token bucket per client key. Buckets start full (burst tokens) and refill
// at requests_per_minute / 60 tokens per second. Thread-safe.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  // Throws ConfigError unless both values are positive.
  explicit RateLimiter(RateLimit limit, Clock clock = {});

  RateDecision try_acquire(const std::string& client_key);
  // Drops buckets of clients idle for at least `idle` whose bucket is full again.
  void prune(std::chrono::seconds idle);
  std::size_t tracked_clients() const;

 private:
  struct Bucket {
    double tokens = 0.0;
    std::chrono::steady_clock::time_point updated;
    std::chrono::steady_clock::time_point last_request;
  };

  std::chrono::steady_clock::time_point now() const;
  void refill(Bucket& b, std::chrono::steady_clock::time_point t) const;

  RateLimit limit_;
  Clock clock_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Bucket> buckets_;
};

}  // namespace tutorrag
