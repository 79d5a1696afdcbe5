#pragma once
// Domain types shared across the pipeline. Everything here is a value type
// and immutable once built, so it can be shared freely between workers.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semroute {

using SubscriptionId = std::string;
using SubscriberId = std::string;

// Separator for compound IDs produced by merging. Forbidden in atomic IDs.
inline constexpr char kCompoundSeparator = '+';

struct Subscription {
  SubscriptionId id;
  std::string description;
  std::set<SubscriberId> subscribers;
  // Atomic source IDs of a merged subscription, in order. Empty when atomic.
  std::vector<SubscriptionId> merged_from;
  // Atomic IDs folded into this one by covering; their subscribers live here.
  std::vector<SubscriptionId> absorbed;

  bool is_compound() const { return !merged_from.empty(); }

  // Atomic IDs named by this subscription's ID (itself, or the merge sources).
  std::vector<SubscriptionId> id_members() const;

  // Every atomic source this subscription stands for: ID members plus
  // anything it absorbed through covering.
  std::vector<SubscriptionId> represented() const;
};

// Builds an atomic subscription; throws InvalidInput on an empty id or
// description, a '+' in the id, or an empty subscriber set.
Subscription make_subscription(SubscriptionId id, std::string description,
                               std::set<SubscriberId> subscribers);

// Compound of a and b: id "a+b" (flattened), subscribers unioned,
// description "desc_a; desc_b".
Subscription merge_subscriptions(const Subscription& a, const Subscription& b);

// a takes over b: b's subscribers and lineage move onto a.
Subscription absorb_subscription(const Subscription& coverer,
                                 const Subscription& covered);

std::vector<SubscriptionId> split_compound_id(std::string_view id);

// d: atomic subscription ID -> description.
class DescriptionMap {
 public:
  DescriptionMap() = default;
  explicit DescriptionMap(std::map<SubscriptionId, std::string> entries)
      : entries_(std::move(entries)) {}

  void set(const SubscriptionId& id, std::string description) {
    entries_[id] = std::move(description);
  }
  bool contains(const SubscriptionId& id) const { return entries_.count(id) != 0; }
  // Throws MissingDescription.
  const std::string& at(const SubscriptionId& id) const;
  // Splits a compound ID and maps every member; throws MissingDescription.
  std::vector<std::string> lookup_split(std::string_view id) const;
  bool injective() const;
  std::size_t distinct_descriptions() const;
  std::size_t size() const { return entries_.size(); }
  const std::map<SubscriptionId, std::string>& entries() const { return entries_; }

 private:
  std::map<SubscriptionId, std::string> entries_;
};

class SubscriptionSet {
 public:
  SubscriptionSet() = default;
  // Builds d from the atomic members.
  explicit SubscriptionSet(std::vector<Subscription> subs);
  // For derived (compressed) sets: d is inherited from the source set.
  SubscriptionSet(std::vector<Subscription> subs, DescriptionMap inherited);

  const std::vector<Subscription>& subscriptions() const { return subs_; }
  const DescriptionMap& descriptions() const { return d_; }
  std::size_t size() const { return subs_.size(); }
  bool empty() const { return subs_.empty(); }
  const Subscription& operator[](std::size_t i) const { return subs_[i]; }
  auto begin() const { return subs_.begin(); }
  auto end() const { return subs_.end(); }

  std::set<SubscriberId> all_subscribers() const;
  // Sum of represented() sizes: how many atomic interests the set stands for.
  std::size_t represented_count() const;

 private:
  std::vector<Subscription> subs_;
  DescriptionMap d_;
};

struct Event {
  std::string id;
  std::string text;
  std::set<SubscriptionId> ground_truth;
};

struct MatchDecision {
  std::string event_id;
  std::vector<SubscriptionId> matched;
};

struct TokenBudget {
  std::int64_t window = 4096;
  std::int64_t t_inst = 200;
  std::int64_t t_s = 80;
  std::int64_t t_e = 30;
  std::int64_t t_resp = 500;

  // Throws InvalidInput when a field is negative or W <= t_inst + t_resp.
  void validate() const;
  std::int64_t prompt_tokens(std::int64_t n_subs, std::int64_t batch) const {
    return t_inst + n_subs * t_s + batch * t_e;
  }
};

struct Violation {
  enum class Kind {
    DuplicateSubscriptionId,
    DuplicateEventId,
    EmptyDescription,
    EmptySubscribers,
    ReservedCharacterInId,
    EmptyEventText,
    DanglingReference,
  };
  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(Violation::Kind kind) const;
  std::string summary() const;
};

// Works on raw (possibly invalid) subscriptions, so it never throws.
ValidationReport validate_dataset(std::span<const Subscription> subs,
                                  std::span<const Event> events);

}  // namespace semroute
