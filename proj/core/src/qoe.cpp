#include "semroute/qoe.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "semroute/csv.hpp"
#include "semroute/errors.hpp"
#include "semroute/metrics.hpp"
#include "semroute/rng.hpp"

namespace semroute::qoe {

Weights Weights::preset(std::string_view name) {
  if (name == "accuracy_first") return accuracy_first();
  if (name == "balanced") return balanced();
  if (name == "cost_first") return cost_first();
  throw InvalidInput("unknown weight preset '" + std::string(name) + "'");
}

void Weights::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw InvalidInput("QoE weights must be non-negative");
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9) throw InvalidInput("QoE weights must sum to 1");
}

CalibrationSplit split_calibration(const std::map<std::size_t, std::vector<Event>>& events_per_cluster,
                                   double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInput("calibration fraction must lie in (0, 1]");
  CalibrationSplit out;
  out.fraction = fraction;
  out.disjoint = fraction < 1.0;
  for (const auto& [cluster, events] : events_per_cluster) {
    auto& cs = out.clusters[cluster];
    if (fraction == 1.0) {
      cs.cal = events;
      cs.eval = events;
      continue;
    }
    // ceil with slack so that e.g. 0.07 * 100 does not become 8.
    const auto n_cal = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(events.size()) - 1e-9));
    std::vector<std::size_t> idx(events.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(hash_combine(seed, cluster));
    rng.shuffle(idx);
    std::vector<bool> in_cal(events.size(), false);
    for (std::size_t i = 0; i < n_cal && i < idx.size(); ++i) in_cal[idx[i]] = true;
    for (std::size_t i = 0; i < events.size(); ++i) (in_cal[i] ? cs.cal : cs.eval).push_back(events[i]);
  }
  return out;
}

std::map<std::size_t, std::set<std::string>> overlaps(const CalibrationSplit& split) {
  std::map<std::size_t, std::set<std::string>> out;
  for (const auto& [cluster, cs] : split.clusters) {
    std::set<std::string> cal;
    for (const auto& e : cs.cal) cal.insert(e.id);
    for (const auto& e : cs.eval) {
      if (cal.count(e.id)) out[cluster].insert(e.id);
    }
  }
  return out;
}

namespace {

// Higher-is-better normalisation; constant metrics map to 0.5.
double normalise(double x, double lo, double hi, bool lower_is_better) {
  if (hi == lo) return 0.5;
  const double t = (x - lo) / (hi - lo);
  return lower_is_better ? 1.0 - t : t;
}

}  // namespace

std::map<std::string, NormalisedScore> qoe_score(const std::vector<CalibrationRecord>& records,
                                                 const Weights& weights) {
  weights.validate();
  std::vector<const CalibrationRecord*> viable;
  for (const auto& r : records) {
    if (r.f1_hat > 0.0) viable.push_back(&r);
  }
  if (viable.empty()) throw NoViableBackend("every candidate backend calibrated to F1 = 0");

  auto range = [&](auto field) {
    double lo = field(*viable.front()), hi = lo;
    for (const auto* r : viable) {
      lo = std::min(lo, field(*r));
      hi = std::max(hi, field(*r));
    }
    return std::pair{lo, hi};
  };
  const auto [f_lo, f_hi] = range([](const CalibrationRecord& r) { return r.f1_hat; });
  const auto [c_lo, c_hi] = range([](const CalibrationRecord& r) { return r.token_cost; });
  const auto [l_lo, l_hi] = range([](const CalibrationRecord& r) { return r.mean_latency; });

  std::map<std::string, NormalisedScore> out;
  for (const auto* r : viable) {
    NormalisedScore s;
    s.f1 = normalise(r->f1_hat, f_lo, f_hi, false);
    s.cost = normalise(r->token_cost, c_lo, c_hi, true);
    s.latency = normalise(r->mean_latency, l_lo, l_hi, true);
    s.score = weights.alpha * s.f1 + weights.beta * s.cost + weights.gamma * s.latency;
    out[r->backend_name] = s;
  }
  return out;
}

std::string argmax(const std::map<std::string, NormalisedScore>& scores) {
  if (scores.empty()) throw NoViableBackend("no scored backends");
  // std::map iterates names in lexicographic order, so strict > keeps the
  // smallest name on ties.
  auto best = scores.begin();
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (it->second.score > best->second.score) best = it;
  }
  return best->first;
}

std::map<std::size_t, std::string> assign(const Strategy& strategy, const std::vector<std::size_t>& clusters,
                                          const std::vector<CalibrationRecord>& records) {
  std::vector<std::size_t> ids = clusters;
  std::sort(ids.begin(), ids.end());
  std::map<std::size_t, std::string> out;

  if (const auto* h = std::get_if<Homogeneous>(&strategy)) {
    for (auto c : ids) out[c] = h->backend;
  } else if (const auto* rr = std::get_if<RoundRobin>(&strategy)) {
    if (rr->order.empty()) throw InvalidInput("round-robin needs at least one backend");
    for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = rr->order[i % rr->order.size()];
  } else {
    const auto& q = std::get<QoeOptimised>(strategy);
    for (auto c : ids) {
      std::vector<CalibrationRecord> mine;
      for (const auto& r : records) {
        if (r.cluster_id == c) mine.push_back(r);
      }
      if (mine.empty()) throw NoViableBackend("no calibration records for cluster " + std::to_string(c));
      try {
        out[c] = argmax(qoe_score(mine, q.weights));
      } catch (const NoViableBackend&) {
        throw NoViableBackend("cluster " + std::to_string(c) + ": every backend calibrated to F1 = 0");
      }
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::string>> filter_disagreements(
    const std::vector<CalibrationRecord>& records) {
  std::set<std::string> positive_somewhere;
  for (const auto& r : records) {
    if (r.f1_hat > 0.0) positive_somewhere.insert(r.backend_name);
  }
  std::vector<std::pair<std::size_t, std::string>> out;
  for (const auto& r : records) {
    if (r.f1_hat <= 0.0 && positive_somewhere.count(r.backend_name)) out.emplace_back(r.cluster_id, r.backend_name);
  }
  return out;
}

std::vector<CalibrationRecord> calibrate(const std::vector<ClusterState>& clusters,
                                         const std::vector<std::shared_ptr<const MatchBackend>>& backends,
                                         const CalibrationSplit& split, const EmbeddingProvider& provider,
                                         const PipelineConfig& cfg) {
  std::vector<CalibrationRecord> out;
  for (const auto& cluster : clusters) {
    auto it = split.clusters.find(cluster.id);
    if (it == split.clusters.end() || it->second.cal.empty()) continue;
    const auto& cal = it->second.cal;

    const bool compound = std::any_of(cluster.compressed.begin(), cluster.compressed.end(),
                                      [](const Subscription& s) { return s.is_compound(); });
    PipelineConfig one = cfg;
    one.prefilter_enabled = false;  // the split already says which events belong here
    one.event_clusters = 0;

    for (const auto& backend : backends) {
      ClusterState solo = cluster;
      solo.id = cluster.id;
      solo.backend = backend;
      solo.backend_name = backend->name();
      std::vector<ClusterState> single{std::move(solo)};
      const auto run = match_events(cal, single, provider, one);

      std::vector<metrics::EventScore> scores;
      for (std::size_t i = 0; i < cal.size(); ++i) {
        scores.push_back(compound ? metrics::score_event_desc(run.decisions[i], cal[i].ground_truth,
                                                              cluster.compressed.descriptions(),
                                                              metrics::UnknownIds::Distinct)
                                  : metrics::score_event_id(run.decisions[i], cal[i].ground_truth));
      }
      CalibrationRecord rec;
      rec.cluster_id = cluster.id;
      rec.backend_name = backend->name();
      rec.f1_hat = metrics::macro_average(scores).f1;
      rec.mean_latency = run.usage.mean_call_latency_s;
      rec.token_cost = run.usage.cost / static_cast<double>(cal.size());
      rec.n_cal_events = cal.size();
      for (const auto& e : cal) rec.sample_event_ids.insert(e.id);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void write_records_csv(std::ostream& out, const std::vector<CalibrationRecord>& records) {
  out << "cluster,backend,f1_hat,mean_latency,token_cost,n_cal_events\n";
  for (const auto& r : records) {
    out << r.cluster_id << ',' << csv::escape(r.backend_name) << ',' << csv::number(r.f1_hat) << ','
        << csv::number(r.mean_latency) << ',' << csv::number(r.token_cost) << ',' << r.n_cal_events << '\n';
  }
}

std::vector<CalibrationRecord> read_records_csv(std::istream& in) {
  const auto table = csv::read(in);
  std::vector<CalibrationRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    CalibrationRecord r;
    try {
      r.cluster_id = std::stoull(table.get(row, "cluster"));
      r.backend_name = table.get(row, "backend");
      r.f1_hat = std::stod(table.get(row, "f1_hat"));
      r.mean_latency = std::stod(table.get(row, "mean_latency"));
      r.token_cost = std::stod(table.get(row, "token_cost"));
      r.n_cal_events = std::stoull(table.get(row, "n_cal_events", "0"));
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("bad calibration row: ") + e.what(), i + 2);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace semroute::qoe
