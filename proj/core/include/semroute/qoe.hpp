#pragma once
// Per-cluster backend selection. Calibration measures each candidate
// backend on a held-out slice of the cluster's events; the QoE score
// min-max normalises accuracy, cost and latency across the candidates and
// takes a weighted sum.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "semroute/backend.hpp"
#include "semroute/model.hpp"
#include "semroute/router.hpp"

namespace semroute::qoe {

struct CalibrationRecord {
  std::size_t cluster_id = 0;
  std::string backend_name;
  double f1_hat = 0.0;
  double mean_latency = 0.0;  // seconds per invocation
  double token_cost = 0.0;    // price-weighted tokens per calibration event
  std::size_t n_cal_events = 0;
  std::set<std::string> sample_event_ids;
};

struct Weights {
  double alpha = 0.34;  // accuracy
  double beta = 0.33;   // cost
  double gamma = 0.33;  // latency

  static Weights accuracy_first() { return {0.70, 0.15, 0.15}; }
  static Weights balanced() { return {0.34, 0.33, 0.33}; }
  static Weights cost_first() { return {0.15, 0.70, 0.15}; }
  // Throws InvalidInput for an unknown preset name.
  static Weights preset(std::string_view name);

  // Throws InvalidInput on negative weights or a sum away from 1 by > 1e-9.
  void validate() const;
};

struct ClusterSplit {
  std::vector<Event> cal;
  std::vector<Event> eval;
};

struct CalibrationSplit {
  std::map<std::size_t, ClusterSplit> clusters;
  double fraction = 0.1;
  // False only for fraction == 1, where cal and eval are both everything.
  bool disjoint = true;
};

// Seeded per-cluster sample of ceil(fraction * n) events for calibration;
// the rest is evaluation. Throws InvalidInput unless 0 < fraction <= 1.
CalibrationSplit split_calibration(const std::map<std::size_t, std::vector<Event>>& events_per_cluster,
                                   double fraction, std::uint64_t seed);

// (cluster, offending event ids) for every cluster whose cal and eval share
// an event. Empty means disjoint.
std::map<std::size_t, std::set<std::string>> overlaps(const CalibrationSplit& split);

struct NormalisedScore {
  double f1 = 0.5;
  double cost = 0.5;
  double latency = 0.5;
  double score = 0.0;
};

// Scores the backends of one cluster. Records with f1_hat <= 0 are
// dropped first. Throws NoViableBackend when nothing survives.
std::map<std::string, NormalisedScore> qoe_score(const std::vector<CalibrationRecord>& records,
                                                 const Weights& weights);

// Highest score; ties go to the lexicographically smallest backend name.
std::string argmax(const std::map<std::string, NormalisedScore>& scores);

struct Homogeneous {
  std::string backend;
};
struct RoundRobin {
  std::vector<std::string> order;
};
struct QoeOptimised {
  Weights weights;
};
using Strategy = std::variant<Homogeneous, RoundRobin, QoeOptimised>;

// cluster id -> backend name. `records` is read only by QoeOptimised.
std::map<std::size_t, std::string> assign(const Strategy& strategy, const std::vector<std::size_t>& clusters,
                                          const std::vector<CalibrationRecord>& records);

// Backends the per-cluster filter drops in some cluster even though they
// score F1 > 0 elsewhere: the cases where filtering per cluster and
// filtering "zero across all clusters" disagree.
std::vector<std::pair<std::size_t, std::string>> filter_disagreements(
    const std::vector<CalibrationRecord>& records);

// Runs every backend on every cluster's calibration events against that
// cluster's subscriptions and records macro-F1 (description-aware when the
// cluster holds compound IDs), mean latency and per-event token cost.
std::vector<CalibrationRecord> calibrate(const std::vector<ClusterState>& clusters,
                                         const std::vector<std::shared_ptr<const MatchBackend>>& backends,
                                         const CalibrationSplit& split, const EmbeddingProvider& provider,
                                         const PipelineConfig& cfg);

// CSV: cluster,backend,f1_hat,mean_latency,token_cost,n_cal_events
void write_records_csv(std::ostream& out, const std::vector<CalibrationRecord>& records);
std::vector<CalibrationRecord> read_records_csv(std::istream& in);

}  // namespace semroute::qoe
