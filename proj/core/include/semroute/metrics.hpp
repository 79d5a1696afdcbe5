#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "semroute/model.hpp"

namespace semroute::metrics {

enum class Variant { Id, Description };
std::string_view to_string(Variant v);

struct EventScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Variant variant = Variant::Id;
};

// Per-event P/R/F1 over raw IDs. Compound IDs are compared as-is.
// Conventions for empty sets: P = G = {} scores (1, 1, 1); P = {} with
// G != {} has precision 0; G = {} with P != {} has recall 1 (nothing to
// recall) and precision 0.
EventScore score_event_id(const MatchDecision& pred, const std::set<SubscriptionId>& truth);

enum class UnknownIds {
  Throw,     // MissingDescription
  Distinct,  // an ID absent from d gets its own unmatched description
};

// Per-event P/R/F1 over description sets: predicted compound IDs are split
// on '+', both sides are mapped through d.
EventScore score_event_desc(const MatchDecision& pred, const std::set<SubscriptionId>& truth,
                            const DescriptionMap& d, UnknownIds unknown = UnknownIds::Throw);

// |P \ G| / (n_subs - |G|), or 0 when n_subs <= |G|.
double false_positive_rate(const MatchDecision& pred, const std::set<SubscriptionId>& truth,
                           std::size_t n_subs);

// Same, over description sets; n_desc is the number of distinct descriptions.
double false_positive_rate_desc(const MatchDecision& pred, const std::set<SubscriptionId>& truth,
                                const DescriptionMap& d, UnknownIds unknown = UnknownIds::Throw);

// Mean of precision, recall and f1 taken independently. Throws InvalidInput
// when empty.
EventScore macro_average(std::span<const EventScore> scores);

struct SeedAggregate {
  double mean = 0.0;
  double half_ci = 0.0;
  std::size_t n = 0;
  bool single_seed = false;
};

// Mean and Student-t half-width with n-1 degrees of freedom. Throws
// InvalidInput when empty or confidence is outside (0, 1).
SeedAggregate aggregate_seeds(std::span<const double> values, double confidence = 0.95);

double t_critical(std::size_t dof, double confidence = 0.95);

}  // namespace semroute::metrics
