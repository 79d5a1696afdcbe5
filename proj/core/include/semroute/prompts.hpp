#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "semroute/model.hpp"

namespace semroute {

struct Prompt {
  std::string system;
  std::string user;
  std::int64_t max_tokens = 512;
};

// Cover/merge template; subscriptions are listed one per line as
// "[id] description" and referenced by 1-based position.
Prompt cover_merge_prompt(std::span<const Subscription> subs);

// Event-matching template; events are listed one per line as
// "[idx] text" with 1-based idx.
Prompt match_prompt(std::span<const Subscription> subs, std::span<const Event> events,
                    std::int64_t kappa, std::int64_t max_tokens);

}  // namespace semroute
