#pragma once

#include <string>
#include <thread>
#include <utility>

#include "specrank/embed_service.hpp"
#include "specrank/error.hpp"

namespace specrank {

/// Runs `fn`, retrying on TransportError with exponential backoff. The last
/// failure surfaces as BackendUnavailable.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto backoff = policy.initial_backoff;
  std::string last;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      return fn();
    } catch (const TransportError& e) {
      last = e.what();
    }
    if (attempt < policy.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorKind::BackendUnavailable,
              "backend unavailable after " + std::to_string(policy.attempts) +
                  " attempts: " + last);
}

}  // namespace specrank
