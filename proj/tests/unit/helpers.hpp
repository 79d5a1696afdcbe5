#pragma once

#include <set>
#include <string>
#include <vector>

#include "semroute/model.hpp"

namespace semroute::test {

inline Subscription sub(const std::string& id, const std::string& description) {
  return make_subscription(id, description, {"u_" + id});
}

inline Event event(const std::string& id, const std::string& text, std::set<SubscriptionId> truth = {}) {
  return Event{id, text, std::move(truth)};
}

inline MatchDecision decision(std::vector<SubscriptionId> ids) { return MatchDecision{"e", std::move(ids)}; }

}  // namespace semroute::test
