#include "semroute/router.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <numeric>
#include <thread>

#include "semroute/clustering.hpp"
#include "semroute/costmodel.hpp"
#include "semroute/errors.hpp"

namespace semroute {

void PipelineConfig::validate() const {
  if (clustering_enabled && k == 0) throw InvalidInput("k must be >= 1");
  if (kappa < 1) throw InvalidInput("kappa must be >= 1");
  if (parallel < 1) throw InvalidInput("parallelism P must be >= 1");
  if (prefilter_enabled && (tau < -1.0 || tau > 1.0)) throw InvalidInput("tau must lie in [-1, 1]");
  budget.validate();
}

BackendAssignment homogeneous(std::shared_ptr<const MatchBackend> backend) {
  return [backend = std::move(backend)](std::size_t) { return backend; };
}

std::vector<SubscriptionSet> partition_subscriptions(const SubscriptionSet& subs,
                                                     const EmbeddingProvider& provider,
                                                     const PipelineConfig& cfg) {
  if (subs.empty()) throw InvalidInput("no subscriptions to partition");
  if (!cfg.clustering_enabled) return {subs};
  if (cfg.k > subs.size()) {
    throw InvalidInput("k=" + std::to_string(cfg.k) + " exceeds " + std::to_string(subs.size()) +
                       " subscriptions");
  }
  std::vector<Vector> vecs;
  vecs.reserve(subs.size());
  for (const auto& s : subs) vecs.push_back(embed_subscription(provider, s, subs.descriptions()));
  const auto clustering = kmeans(vecs, KMeansConfig{.k = cfg.k, .seed = cfg.seed});

  std::vector<SubscriptionSet> groups;
  for (const auto& members : clustering.members()) {
    if (members.empty()) continue;
    std::vector<Subscription> part;
    for (auto i : members) part.push_back(subs[i]);
    groups.emplace_back(std::move(part), subs.descriptions());
  }
  return groups;
}

Vector embed_subscription(const EmbeddingProvider& provider, const Subscription& s,
                          const DescriptionMap& d) {
  try {
    return provider.embed(s.description);
  } catch (const MissingEmbedding&) {
    if (!s.is_compound()) throw;
  }
  std::vector<Vector> parts;
  for (const auto& desc : d.lookup_split(s.id)) parts.push_back(provider.embed(desc));
  Vector v(parts.front().size(), 0.0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += p[i];
  }
  normalize_in_place(v);
  return v;
}

Vector set_centroid(const EmbeddingProvider& provider, const SubscriptionSet& set) {
  if (set.empty()) throw InvalidInput("centroid of an empty subscription set");
  Vector c(provider.dimension(), 0.0);
  for (const auto& s : set) {
    const auto v = embed_subscription(provider, s, set.descriptions());
    if (v.size() != c.size()) throw InvalidInput("embedding dimension does not match the provider");
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[i];
  }
  for (double& x : c) x /= static_cast<double>(set.size());
  return c;
}

std::vector<ClusterState> optimize_subscriptions(const SubscriptionSet& subs,
                                                 const EmbeddingProvider& provider,
                                                 const PipelineConfig& cfg,
                                                 const BackendAssignment& backends) {
  cfg.validate();
  auto groups = partition_subscriptions(subs, provider, cfg);

  std::vector<ClusterState> clusters;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    ClusterState st;
    st.id = c;
    st.backend = backends(c);
    if (!st.backend) throw InvalidInput("no backend assigned to cluster " + std::to_string(c));
    st.backend_name = st.backend->name();
    st.original_size = groups[c].size();
    if (cfg.compression_enabled) {
      auto res = cover_and_merge(groups[c], *st.backend);
      st.compressed = std::move(res.compressed);
      st.compression_rounds = res.rounds;
      st.merges_applied = res.merges_applied;
      st.compression_usage = res.usage;
    } else {
      st.compressed = std::move(groups[c]);
    }
    clusters.push_back(std::move(st));
  }

  if (cfg.reunite && clusters.size() > 1) {
    ClusterState all;
    all.id = 0;
    all.backend = clusters.front().backend;
    all.backend_name = clusters.front().backend_name;
    std::vector<Subscription> merged;
    for (auto& c : clusters) {
      merged.insert(merged.end(), c.compressed.begin(), c.compressed.end());
      all.original_size += c.original_size;
      all.compression_rounds += c.compression_rounds;
      all.merges_applied += c.merges_applied;
      all.compression_usage += c.compression_usage;
    }
    all.compressed = SubscriptionSet(std::move(merged), subs.descriptions());
    clusters.clear();
    clusters.push_back(std::move(all));
  }

  for (auto& c : clusters) c.centroid = set_centroid(provider, c.compressed);
  return clusters;
}

double overall_rho(const std::vector<ClusterState>& clusters) {
  std::size_t before = 0, after = 0;
  for (const auto& c : clusters) {
    before += c.original_size;
    after += c.compressed.size();
  }
  return before ? static_cast<double>(after) / static_cast<double>(before) : 1.0;
}

std::vector<std::size_t> cluster_events(const std::vector<Event>& events,
                                        const EmbeddingProvider& provider, std::size_t k_e,
                                        std::uint64_t seed) {
  std::vector<Vector> vecs;
  vecs.reserve(events.size());
  for (const auto& e : events) vecs.push_back(provider.embed(e.text));
  return kmeans(vecs, KMeansConfig{.k = k_e, .seed = seed}).assignments;
}

namespace {

struct Task {
  std::size_t cluster;
  std::size_t group;
  std::vector<std::size_t> events;
};

}  // namespace

MatchRun match_events(const std::vector<Event>& events, std::vector<ClusterState>& clusters,
                      const EmbeddingProvider& provider, const PipelineConfig& cfg,
                      const MatchOptions& options) {
  cfg.validate();
  if (clusters.empty()) throw InvalidInput("match_events needs at least one cluster");

  MatchRun run;
  run.decisions.resize(events.size());
  run.dispatch_count.assign(events.size(), 0);
  for (std::size_t i = 0; i < events.size(); ++i) run.decisions[i].event_id = events[i].id;

  // Route: every cluster at or above tau, else the nearest centroid.
  std::vector<std::vector<std::size_t>> queued(clusters.size());
  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto v = provider.embed(events[e].text);
    std::size_t best = 0;
    double best_sim = -2.0;
    bool placed = false;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const double sim = cosine(v, clusters[c].centroid);
      if (!cfg.prefilter_enabled || sim >= cfg.tau) {
        queued[c].push_back(e);
        placed = true;
      }
      if (sim > best_sim) {
        best_sim = sim;
        best = c;
      }
    }
    if (!placed) {
      queued[best].push_back(e);
      ++run.fallback_events;
    }
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    clusters[c].queue.clear();
    for (auto e : queued[c]) clusters[c].queue.push_back(events[e]);
  }

  std::vector<std::size_t> group_of(events.size(), 0);
  if (cfg.event_clusters > 0 && !events.empty()) {
    if (cfg.event_clusters > events.size()) {
      throw InvalidInput("k_e=" + std::to_string(cfg.event_clusters) + " exceeds " +
                         std::to_string(events.size()) + " events");
    }
    group_of = cluster_events(events, provider, cfg.event_clusters, cfg.seed);
  }

  // Pack each queue into batches of at most b_max, never spanning two
  // event groups.
  std::vector<Task> tasks;
  std::vector<std::vector<Subscription>> prompt_subs(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& q = queued[c];
    if (q.empty()) continue;
    const auto& all = clusters[c].compressed.subscriptions();
    std::int64_t n_subs = static_cast<std::int64_t>(all.size());
    std::int64_t b = cost::batch_capacity(cfg.budget, n_subs);
    std::int64_t truncated = 0;
    if (b < 1) {
      const auto keep = cost::max_subscriptions_for_one_event(cfg.budget);
      if (!cfg.truncate_to_fit || keep < 1) {
        throw SubscriptionsExceedWindow(
            clusters[c].id, "cluster " + std::to_string(clusters[c].id) + " has " + std::to_string(n_subs) +
                                " subscriptions; not even one event fits in a " +
                                std::to_string(cfg.budget.window) + "-token window");
      }
      truncated = n_subs - keep;
      n_subs = keep;
      b = cost::batch_capacity(cfg.budget, n_subs);
    }
    prompt_subs[c].assign(all.begin(), all.begin() + n_subs);

    std::map<std::size_t, std::vector<std::size_t>> by_group;
    for (auto e : q) by_group[group_of[e]].push_back(e);
    std::int64_t calls = 0;
    for (const auto& [g, members] : by_group) {
      for (std::size_t start = 0; start < members.size(); start += static_cast<std::size_t>(b)) {
        const auto end = std::min(members.size(), start + static_cast<std::size_t>(b));
        tasks.push_back({c, g, std::vector<std::size_t>(members.begin() + start, members.begin() + end)});
        ++calls;
      }
    }
    run.clusters.push_back({clusters[c].id, static_cast<std::int64_t>(q.size()), n_subs, truncated, b, calls});
  }

  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  if (options.dispatch_order) {
    order = *options.dispatch_order;
    auto check = order;
    std::sort(check.begin(), check.end());
    for (std::size_t i = 0; i < check.size(); ++i) {
      if (check.size() != tasks.size() || check[i] != i) {
        throw InvalidInput("dispatch_order is not a permutation of the batch indices");
      }
    }
  }

  std::vector<CallResult<MatchResponse>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  auto execute = [&](std::size_t t) {
    try {
      const auto& task = tasks[t];
      std::vector<Event> batch;
      batch.reserve(task.events.size());
      for (auto e : task.events) batch.push_back(events[e]);
      results[t] = clusters[task.cluster].backend->match(prompt_subs[task.cluster], batch, cfg.kappa, cfg.budget);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(cfg.parallel, tasks.size());
  if (workers <= 1) {
    for (auto t : order) execute(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < order.size(); i = next++) execute(order[i]);
      });
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  // Merge in canonical (cluster, batch) order so the outcome does not
  // depend on who finished first.
  std::vector<double> worker_free(std::max<std::size_t>(cfg.parallel, 1), 0.0);
  double total_call_latency = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto it = std::min_element(worker_free.begin(), worker_free.end());
    *it += results[t].usage.latency_s;
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    const auto& res = results[t];
    const auto pricing = clusters[task.cluster].backend->pricing();
    run.usage.invocations += 1;
    run.usage.prompt_tokens += res.usage.prompt_tokens;
    run.usage.response_tokens += res.usage.response_tokens;
    run.usage.cost += static_cast<double>(res.usage.prompt_tokens) * pricing.input +
                      static_cast<double>(res.usage.response_tokens) * pricing.output;
    total_call_latency += res.usage.latency_s;

    for (auto e : task.events) ++run.dispatch_count[e];
    for (const auto& [idx, id] : res.payload.matches) {
      if (idx < 1 || idx > task.events.size()) {
        throw BackendProtocolError("backend answered for event " + std::to_string(idx) + " of a " +
                                   std::to_string(task.events.size()) + "-event batch");
      }
      auto& matched = run.decisions[task.events[idx - 1]].matched;
      if (std::find(matched.begin(), matched.end(), id) == matched.end()) matched.push_back(id);
    }
    run.batches.push_back({clusters[task.cluster].id, task.group, task.events,
                           static_cast<std::int64_t>(prompt_subs[task.cluster].size()), res.usage});
  }
  run.usage.latency_s = *std::max_element(worker_free.begin(), worker_free.end());
  run.usage.mean_call_latency_s =
      tasks.empty() ? 0.0 : total_call_latency / static_cast<double>(tasks.size());

  for (auto& d : run.decisions) {
    if (static_cast<std::int64_t>(d.matched.size()) > cfg.kappa) d.matched.resize(static_cast<std::size_t>(cfg.kappa));
    if (d.matched.empty()) ++run.empty_predictions;
  }
  for (auto& c : clusters) c.queue.clear();
  return run;
}

}  // namespace semroute
