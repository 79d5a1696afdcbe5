#include "semroute/covermerge.hpp"

#include <algorithm>
#include <optional>

#include "semroute/errors.hpp"

namespace semroute {

namespace {

void check_pair(const IndexPair& p, std::size_t n, const char* kind) {
  if (p.first < 1 || p.second < 1 || p.first > n || p.second > n) {
    throw BackendProtocolError(std::string(kind) + " pair (" + std::to_string(p.first) + ", " +
                               std::to_string(p.second) + ") outside 1.." + std::to_string(n));
  }
  if (p.first == p.second) {
    throw BackendProtocolError(std::string(kind) + " pair relates subscription " +
                               std::to_string(p.first) + " to itself");
  }
}

}  // namespace

RoundOutcome apply_decision(const std::vector<Subscription>& current, const CoverMergeDecision& d) {
  const std::size_t n = current.size();
  for (const auto& p : d.covers) check_pair(p, n, "cover");
  for (const auto& p : d.merges) check_pair(p, n, "merge");

  // slot[i] holds the live subscription that occupies position i, or
  // nothing once consumed. Merged results take the lower position.
  std::vector<std::optional<Subscription>> slot(current.begin(), current.end());
  std::vector<bool> consumed(n, false);
  RoundOutcome out;

  for (const auto& [i1, j1] : d.covers) {
    const auto i = i1 - 1, j = j1 - 1;
    if (consumed[i] || consumed[j]) continue;
    slot[i] = absorb_subscription(*slot[i], *slot[j]);
    slot[j].reset();
    consumed[j] = true;
    ++out.covers_applied;
  }
  for (const auto& [i1, j1] : d.merges) {
    const auto i = i1 - 1, j = j1 - 1;
    if (consumed[i] || consumed[j]) continue;
    auto merged = merge_subscriptions(*slot[i], *slot[j]);
    const auto keep = std::min(i, j);
    slot[i].reset();
    slot[j].reset();
    slot[keep] = std::move(merged);
    consumed[i] = consumed[j] = true;
    ++out.merges_applied;
  }

  for (auto& s : slot) {
    if (s) out.next.push_back(std::move(*s));
  }
  return out;
}

CompressionResult cover_and_merge(const SubscriptionSet& set, const MatchBackend& backend) {
  if (set.empty()) throw InvalidInput("cover_and_merge needs at least one subscription");

  std::vector<Subscription> current = set.subscriptions();
  CompressionResult result;
  result.rounds = 0;

  while (current.size() >= 2) {
    auto call = backend.cover_merge(current);
    ++result.rounds;
    result.usage += call.usage;
    if (call.payload.empty()) break;
    auto outcome = apply_decision(current, call.payload);
    if (outcome.covers_applied + outcome.merges_applied == 0) break;
    result.covers_applied += outcome.covers_applied;
    result.merges_applied += outcome.merges_applied;
    current = std::move(outcome.next);
  }
  result.rounds = std::max<std::size_t>(result.rounds, 1);

  for (const auto& s : current) {
    auto reps = s.represented();
    if (reps.size() > 1 || reps.front() != s.id) result.lineage[s.id] = std::move(reps);
  }
  result.rho = static_cast<double>(current.size()) / static_cast<double>(set.size());
  result.compressed = SubscriptionSet(std::move(current), set.descriptions());
  return result;
}

}  // namespace semroute
