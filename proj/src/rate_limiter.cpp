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

#include "tutorrag/rate_limiter.hpp"

#include <algorithm>

#include "tutorrag/error.hpp"

namespace tutorrag {

RateLimiter::RateLimiter(RateLimit limit, Clock clock) : limit_(limit), clock_(std::move(clock)) {
  if (limit_.requests_per_minute <= 0 || limit_.burst <= 0) {
    throw Error(ErrorCode::ConfigError, "rate limit values must be > 0");
  }
}

std::chrono::steady_clock::time_point RateLimiter::now() const {
  return clock_ ? clock_() : std::chrono::steady_clock::now();
}

void RateLimiter::refill(Bucket& b, std::chrono::steady_clock::time_point t) const {
  if (t <= b.updated) return;
  const std::chrono::duration<double> dt = t - b.updated;
  const double rate = static_cast<double>(limit_.requests_per_minute) / 60.0;
  b.tokens = std::min(static_cast<double>(limit_.burst), b.tokens + dt.count() * rate);
  b.updated = t;
}

RateDecision RateLimiter::try_acquire(const std::string& client_key) {
  std::lock_guard lock(mu_);
  const auto t = now();
  auto [it, fresh] = buckets_.try_emplace(client_key);
  Bucket& b = it->second;
  if (fresh) {
    b.tokens = static_cast<double>(limit_.burst);
    b.updated = t;
  }
  refill(b, t);
  b.last_request = t;
  if (b.tokens >= 1.0) {
    b.tokens -= 1.0;
    return {true, 0.0};
  }
  const double rate = static_cast<double>(limit_.requests_per_minute) / 60.0;
  return {false, (1.0 - b.tokens) / rate};
}

void RateLimiter::prune(std::chrono::seconds idle) {
  std::lock_guard lock(mu_);
  const auto t = now();
  for (auto it = buckets_.begin(); it != buckets_.end();) {
    refill(it->second, t);
    const bool full = it->second.tokens >= static_cast<double>(limit_.burst);
    if (full && t - it->second.last_request >= idle) {
      it = buckets_.erase(it);
    } else {
      ++it;
    }
  }
}

std::size_t RateLimiter::tracked_clients() const {
  std::lock_guard lock(mu_);
  return buckets_.size();
}

}  // namespace tutorrag
