#include "semroute/model.hpp"

#include <algorithm>
#include <sstream>

#include "semroute/errors.hpp"

namespace semroute {

std::vector<SubscriptionId> Subscription::id_members() const {
  if (merged_from.empty()) return {id};
  return merged_from;
}

std::vector<SubscriptionId> Subscription::represented() const {
  auto out = id_members();
  out.insert(out.end(), absorbed.begin(), absorbed.end());
  return out;
}

Subscription make_subscription(SubscriptionId id, std::string description,
                               std::set<SubscriberId> subscribers) {
  if (id.empty()) throw InvalidInput("subscription id is empty");
  if (id.find(kCompoundSeparator) != std::string::npos) {
    throw InvalidInput("atomic subscription id '" + id + "' contains '+'");
  }
  if (description.empty()) throw InvalidInput("subscription '" + id + "' has an empty description");
  if (subscribers.empty()) throw InvalidInput("subscription '" + id + "' has no subscribers");
  return Subscription{std::move(id), std::move(description), std::move(subscribers), {}, {}};
}

Subscription merge_subscriptions(const Subscription& a, const Subscription& b) {
  Subscription out;
  out.merged_from = a.id_members();
  auto rhs = b.id_members();
  out.merged_from.insert(out.merged_from.end(), rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < out.merged_from.size(); ++i) {
    if (i) out.id += kCompoundSeparator;
    out.id += out.merged_from[i];
  }
  out.description = a.description + "; " + b.description;
  out.subscribers = a.subscribers;
  out.subscribers.insert(b.subscribers.begin(), b.subscribers.end());
  out.absorbed = a.absorbed;
  out.absorbed.insert(out.absorbed.end(), b.absorbed.begin(), b.absorbed.end());
  return out;
}

Subscription absorb_subscription(const Subscription& coverer, const Subscription& covered) {
  Subscription out = coverer;
  out.subscribers.insert(covered.subscribers.begin(), covered.subscribers.end());
  auto gone = covered.represented();
  out.absorbed.insert(out.absorbed.end(), gone.begin(), gone.end());
  return out;
}

std::vector<SubscriptionId> split_compound_id(std::string_view id) {
  std::vector<SubscriptionId> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = id.find(kCompoundSeparator, start);
    parts.emplace_back(id.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

const std::string& DescriptionMap::at(const SubscriptionId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw MissingDescription("no description for subscription '" + id + "'");
  return it->second;
}

std::vector<std::string> DescriptionMap::lookup_split(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& member : split_compound_id(id)) out.push_back(at(member));
  return out;
}

bool DescriptionMap::injective() const { return distinct_descriptions() == entries_.size(); }

std::size_t DescriptionMap::distinct_descriptions() const {
  std::set<std::string_view> seen;
  for (const auto& [id, desc] : entries_) seen.insert(desc);
  return seen.size();
}

SubscriptionSet::SubscriptionSet(std::vector<Subscription> subs) : subs_(std::move(subs)) {
  for (const auto& s : subs_) {
    if (!s.is_compound()) d_.set(s.id, s.description);
  }
}

SubscriptionSet::SubscriptionSet(std::vector<Subscription> subs, DescriptionMap inherited)
    : subs_(std::move(subs)), d_(std::move(inherited)) {
  for (const auto& s : subs_) {
    if (!s.is_compound() && !d_.contains(s.id)) d_.set(s.id, s.description);
  }
}

std::set<SubscriberId> SubscriptionSet::all_subscribers() const {
  std::set<SubscriberId> out;
  for (const auto& s : subs_) out.insert(s.subscribers.begin(), s.subscribers.end());
  return out;
}

std::size_t SubscriptionSet::represented_count() const {
  std::size_t n = 0;
  for (const auto& s : subs_) n += s.represented().size();
  return n;
}

void TokenBudget::validate() const {
  if (window < 0 || t_inst < 0 || t_s < 0 || t_e < 0 || t_resp < 0) {
    throw InvalidInput("token budget fields must be non-negative");
  }
  if (window <= t_inst + t_resp) {
    throw InvalidInput("window " + std::to_string(window) +
                       " leaves no room after instructions and response reserve");
  }
  if (t_e == 0) throw InvalidInput("t_e must be positive");
}

bool ValidationReport::has(Violation::Kind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.message << '\n';
  return os.str();
}

ValidationReport validate_dataset(std::span<const Subscription> subs,
                                  std::span<const Event> events) {
  using K = Violation::Kind;
  ValidationReport report;
  auto add = [&](K kind, std::string msg) { report.violations.push_back({kind, std::move(msg)}); };

  std::set<std::string> sub_ids;
  for (const auto& s : subs) {
    if (!sub_ids.insert(s.id).second) add(K::DuplicateSubscriptionId, "duplicate subscription id '" + s.id + "'");
    if (s.id.find(kCompoundSeparator) != std::string::npos && !s.is_compound()) {
      add(K::ReservedCharacterInId, "subscription id '" + s.id + "' contains reserved '+'");
    }
    if (s.description.empty()) add(K::EmptyDescription, "subscription '" + s.id + "' has an empty description");
    if (s.subscribers.empty()) add(K::EmptySubscribers, "subscription '" + s.id + "' has no subscribers");
  }

  std::set<std::string> event_ids;
  for (const auto& e : events) {
    if (!event_ids.insert(e.id).second) add(K::DuplicateEventId, "duplicate event id '" + e.id + "'");
    if (e.text.empty()) add(K::EmptyEventText, "event '" + e.id + "' has empty text");
    for (const auto& g : e.ground_truth) {
      if (!sub_ids.count(g)) {
        add(K::DanglingReference, "event '" + e.id + "' references unknown subscription '" + g + "'");
      }
    }
  }
  return report;
}

}  // namespace semroute
