#include "semroute/metrics.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "semroute/errors.hpp"

namespace semroute::metrics {

namespace {

EventScore score_sets(const std::set<std::string>& p, const std::set<std::string>& g, Variant v) {
  EventScore s;
  s.variant = v;
  if (p.empty() && g.empty()) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  std::size_t hit = 0;
  for (const auto& x : p) hit += g.count(x);
  s.precision = p.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(p.size());
  s.recall = g.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(g.size());
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

void add_descriptions(std::set<std::string>& out, const SubscriptionId& id, const DescriptionMap& d,
                      UnknownIds unknown) {
  for (const auto& member : split_compound_id(id)) {
    if (d.contains(member)) {
      out.insert(d.at(member));
    } else if (unknown == UnknownIds::Distinct) {
      // Control characters never occur in loaded descriptions.
      out.insert(std::string("\x01unknown:") + member);
    } else {
      throw MissingDescription("no description for subscription '" + member + "'");
    }
  }
}

std::set<std::string> describe(const std::vector<SubscriptionId>& ids, const DescriptionMap& d,
                               UnknownIds unknown) {
  std::set<std::string> out;
  for (const auto& id : ids) add_descriptions(out, id, d, unknown);
  return out;
}

std::set<std::string> describe(const std::set<SubscriptionId>& ids, const DescriptionMap& d,
                               UnknownIds unknown) {
  std::set<std::string> out;
  for (const auto& id : ids) add_descriptions(out, id, d, unknown);
  return out;
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::Id ? "id" : "description"; }

EventScore score_event_id(const MatchDecision& pred, const std::set<SubscriptionId>& truth) {
  std::set<std::string> p(pred.matched.begin(), pred.matched.end());
  return score_sets(p, truth, Variant::Id);
}

EventScore score_event_desc(const MatchDecision& pred, const std::set<SubscriptionId>& truth,
                            const DescriptionMap& d, UnknownIds unknown) {
  return score_sets(describe(pred.matched, d, unknown), describe(truth, d, UnknownIds::Throw),
                    Variant::Description);
}

double false_positive_rate(const MatchDecision& pred, const std::set<SubscriptionId>& truth,
                           std::size_t n_subs) {
  if (n_subs <= truth.size()) return 0.0;
  std::set<std::string> p(pred.matched.begin(), pred.matched.end());
  std::size_t fp = 0;
  for (const auto& x : p) fp += truth.count(x) ? 0 : 1;
  return std::min(1.0, static_cast<double>(fp) / static_cast<double>(n_subs - truth.size()));
}

double false_positive_rate_desc(const MatchDecision& pred, const std::set<SubscriptionId>& truth,
                                const DescriptionMap& d, UnknownIds unknown) {
  const auto p = describe(pred.matched, d, unknown);
  const auto g = describe(truth, d, UnknownIds::Throw);
  const std::size_t n = d.distinct_descriptions();
  if (n <= g.size()) return 0.0;
  std::size_t fp = 0;
  for (const auto& x : p) fp += g.count(x) ? 0 : 1;
  return std::min(1.0, static_cast<double>(fp) / static_cast<double>(n - g.size()));
}

EventScore macro_average(std::span<const EventScore> scores) {
  if (scores.empty()) throw InvalidInput("macro average of no events");
  EventScore m;
  m.variant = scores.front().variant;
  for (const auto& s : scores) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const double n = static_cast<double>(scores.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

double t_critical(std::size_t dof, double confidence) {
  if (dof == 0) throw InvalidInput("t critical value needs at least one degree of freedom");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

SeedAggregate aggregate_seeds(std::span<const double> values, double confidence) {
  if (values.empty()) throw InvalidInput("aggregate of no values");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidInput("confidence must lie in (0, 1)");
  SeedAggregate a;
  a.n = values.size();
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(a.n);
  if (a.n == 1) {
    a.single_seed = true;
    return a;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  const double sd = std::sqrt(ss / static_cast<double>(a.n - 1));
  a.half_ci = t_critical(a.n - 1, confidence) * sd / std::sqrt(static_cast<double>(a.n));
  return a;
}

}  // namespace semroute::metrics
