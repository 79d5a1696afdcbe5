#pragma once

#include <map>
#include <vector>

#include "semroute/backend.hpp"
#include "semroute/model.hpp"

namespace semroute {

struct CompressionResult {
  SubscriptionSet compressed;
  double rho = 1.0;          // |compressed| / |original|
  std::size_t rounds = 1;    // backend rounds, at least 1
  std::size_t covers_applied = 0;
  std::size_t merges_applied = 0;
  // Surviving ID -> every atomic source it now represents, for survivors
  // that stand for more than themselves.
  std::map<SubscriptionId, std::vector<SubscriptionId>> lineage;
  Usage usage;
};

struct RoundOutcome {
  std::vector<Subscription> next;
  std::size_t covers_applied = 0;
  std::size_t merges_applied = 0;
};

// Applies one decision to `current`: covers first, then merges, each in
// listed order; a pair touching a subscription already consumed this
// round is dropped. Throws BackendProtocolError on out-of-range or
// self-referencing indices.
RoundOutcome apply_decision(const std::vector<Subscription>& current, const CoverMergeDecision& d);

// Repeats backend cover/merge rounds until the backend proposes nothing
// (or nothing it proposes can be applied). Throws InvalidInput on an empty
// set; backend errors propagate.
CompressionResult cover_and_merge(const SubscriptionSet& set, const MatchBackend& backend);

}  // namespace semroute
