#pragma once
// The two pipeline entry points. optimize_subscriptions embeds, clusters and
// compresses the subscription table; match_events routes events to clusters
// by centroid similarity, packs per-cluster prompts under the token budget
// and unions the backend's answers per event.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semroute/backend.hpp"
#include "semroute/covermerge.hpp"
#include "semroute/embedding.hpp"
#include "semroute/model.hpp"

namespace semroute {

struct PipelineConfig {
  std::string preset = "custom";
  std::size_t k = 19;
  double tau = 0.3;
  std::int64_t kappa = 3;
  bool reunite = false;
  std::size_t event_clusters = 0;  // k_e; 0 disables event-side clustering
  bool compression_enabled = false;
  bool clustering_enabled = false;
  bool prefilter_enabled = false;
  TokenBudget budget;
  // Drop trailing subscriptions when not even one event fits, instead of
  // failing with SubscriptionsExceedWindow.
  bool truncate_to_fit = false;
  std::uint64_t seed = 42;  // k-means seed (subscription and event side)
  std::size_t parallel = 1;  // P concurrent dispatch workers

  // Throws InvalidInput for out-of-range fields.
  void validate() const;
};

struct ClusterState {
  std::size_t id = 0;
  SubscriptionSet compressed;
  Vector centroid;
  std::string backend_name;
  std::shared_ptr<const MatchBackend> backend;
  std::vector<Event> queue;
  std::size_t original_size = 0;  // |c.S| before compression
  std::size_t compression_rounds = 0;
  std::size_t merges_applied = 0;
  Usage compression_usage;

  double rho() const {
    return original_size ? static_cast<double>(compressed.size()) / static_cast<double>(original_size) : 1.0;
  }
};

using BackendAssignment = std::function<std::shared_ptr<const MatchBackend>(std::size_t cluster)>;

BackendAssignment homogeneous(std::shared_ptr<const MatchBackend> backend);

// k-means partition of the subscriptions (or one group when clustering is
// off). Empty k-means clusters are dropped; groups keep input order.
std::vector<SubscriptionSet> partition_subscriptions(const SubscriptionSet& subs,
                                                     const EmbeddingProvider& provider,
                                                     const PipelineConfig& cfg);

// theta of a (possibly compound) subscription. A provider that has no entry
// for a merged description gets the normalised mean of its sources.
Vector embed_subscription(const EmbeddingProvider& provider, const Subscription& s,
                          const DescriptionMap& d);

Vector set_centroid(const EmbeddingProvider& provider, const SubscriptionSet& set);

std::vector<ClusterState> optimize_subscriptions(const SubscriptionSet& subs,
                                                 const EmbeddingProvider& provider,
                                                 const PipelineConfig& cfg,
                                                 const BackendAssignment& backends);

// |compressed| / |original| summed over clusters.
double overall_rho(const std::vector<ClusterState>& clusters);

// Event-side k-means; returns a group label per event.
std::vector<std::size_t> cluster_events(const std::vector<Event>& events,
                                        const EmbeddingProvider& provider, std::size_t k_e,
                                        std::uint64_t seed);

struct BatchRecord {
  std::size_t cluster = 0;
  std::size_t group = 0;  // event-side cluster, 0 when disabled
  std::vector<std::size_t> events;  // indices into the input event list
  std::int64_t n_subs = 0;
  Usage usage;
};

struct ClusterDispatch {
  std::size_t cluster = 0;
  std::int64_t m_c = 0;
  std::int64_t n_subs = 0;  // after any truncation
  std::int64_t truncated = 0;
  std::int64_t b_max = 0;
  std::int64_t invocations = 0;
};

struct RunUsage {
  std::int64_t invocations = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t response_tokens = 0;
  // Makespan of the invocations list-scheduled onto P workers.
  double latency_s = 0.0;
  double mean_call_latency_s = 0.0;
  double cost = 0.0;
};

struct MatchRun {
  std::vector<MatchDecision> decisions;  // parallel to the input events
  RunUsage usage;
  std::vector<ClusterDispatch> clusters;
  std::vector<BatchRecord> batches;
  std::vector<std::size_t> dispatch_count;  // invocations each event took part in
  std::size_t fallback_events = 0;
  std::size_t empty_predictions = 0;

  double empty_prediction_rate() const {
    return decisions.empty() ? 0.0
                             : static_cast<double>(empty_predictions) / static_cast<double>(decisions.size());
  }
};

struct MatchOptions {
  // Permutation of batch indices used for dispatch; the default is
  // (cluster, batch) order. Results never depend on it.
  std::optional<std::vector<std::size_t>> dispatch_order;
};

// Throws InvalidInput when clusters is empty, SubscriptionsExceedWindow
// when a cluster cannot take even one event and truncation is off.
MatchRun match_events(const std::vector<Event>& events, std::vector<ClusterState>& clusters,
                      const EmbeddingProvider& provider, const PipelineConfig& cfg,
                      const MatchOptions& options = {});

}  // namespace semroute
