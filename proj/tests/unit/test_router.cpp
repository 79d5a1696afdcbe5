#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "semroute/errors.hpp"
#include "semroute/harness.hpp"
#include "semroute/router.hpp"

namespace semroute {
namespace {

using test::event;
using test::sub;

class RouterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ds = harness::generate_synthetic({.n_subscriptions = 19, .n_events = 120, .seed = 5});
    oracle = std::make_shared<SimulatedBackend>(SimulatedBackend::oracle_config());
  }

  MatchRun run(PipelineConfig cfg, const MatchOptions& opts = {}) {
    auto clusters = optimize_subscriptions(ds.subscriptions, embedder, cfg, homogeneous(oracle));
    return match_events(ds.events, clusters, embedder, cfg, opts);
  }

  static std::set<SubscriptionId> as_set(const MatchDecision& d) { return {d.matched.begin(), d.matched.end()}; }

  harness::Dataset ds;
  HashedTfEmbedder embedder;
  std::shared_ptr<SimulatedBackend> oracle;
};

TEST_F(RouterTest, A0OracleReproducesGroundTruth) {
  const auto r = run(harness::preset("A0"));
  ASSERT_EQ(r.decisions.size(), ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    EXPECT_EQ(r.decisions[i].event_id, ds.events[i].id);
    EXPECT_EQ(as_set(r.decisions[i]), ds.events[i].ground_truth) << ds.events[i].id;
  }
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].m_c, 120);
  EXPECT_EQ(r.usage.invocations, r.clusters[0].invocations);
}

TEST_F(RouterTest, PresetsAreWellFormed) {
  for (const auto& name : harness::preset_names()) {
    const auto cfg = harness::preset(name);
    EXPECT_EQ(cfg.k, 19u);
    EXPECT_DOUBLE_EQ(cfg.tau, 0.3);
    EXPECT_EQ(cfg.kappa, 3);
    EXPECT_NO_THROW(run(cfg)) << name;
  }
  EXPECT_FALSE(harness::preset("A0").clustering_enabled);
  EXPECT_TRUE(harness::preset("A4").reunite);
  EXPECT_EQ(harness::preset("A5").event_clusters, 5u);
  EXPECT_FALSE(harness::preset("A6").prefilter_enabled);
  EXPECT_THROW(harness::preset("A7"), InvalidInput);
}

TEST_F(RouterTest, HighTauFallsBackToNearestOnce) {
  auto cfg = harness::preset("A1");
  cfg.tau = 0.99;
  const auto r = run(cfg);
  EXPECT_EQ(r.fallback_events, ds.events.size());
  for (auto n : r.dispatch_count) EXPECT_EQ(n, 1u);
}

TEST_F(RouterTest, PrefilterOffEqualsTauMinusOne) {
  auto off = harness::preset("A6");
  auto on = harness::preset("A3");
  on.tau = -1.0;
  const auto a = run(off), b = run(on);
  EXPECT_EQ(a.usage.invocations, b.usage.invocations);
  for (std::size_t i = 0; i < a.decisions.size(); ++i) EXPECT_EQ(a.decisions[i].matched, b.decisions[i].matched);
  for (auto n : a.dispatch_count) EXPECT_EQ(n, a.clusters.size());
}

TEST_F(RouterTest, PackingRespectsBudget) {
  auto cfg = harness::preset("A1");
  cfg.tau = -1.0;
  const auto r = run(cfg);
  std::map<std::size_t, std::int64_t> calls;
  for (const auto& b : r.batches) {
    const auto it = std::find_if(r.clusters.begin(), r.clusters.end(),
                                 [&](const ClusterDispatch& c) { return c.cluster == b.cluster; });
    ASSERT_NE(it, r.clusters.end());
    EXPECT_LE(static_cast<std::int64_t>(b.events.size()), it->b_max);
    EXPECT_LE(b.usage.prompt_tokens + cfg.budget.t_resp, cfg.budget.window);
    ++calls[b.cluster];
  }
  for (const auto& c : r.clusters) {
    EXPECT_EQ(calls[c.cluster], c.invocations);
    EXPECT_EQ(c.invocations, (c.m_c + c.b_max - 1) / c.b_max);
  }
}

TEST_F(RouterTest, EventGroupsNeverShareABatch) {
  auto cfg = harness::preset("A5");
  const auto r = run(cfg);
  const auto groups = cluster_events(ds.events, embedder, 5, cfg.seed);
  for (const auto& b : r.batches) {
    for (auto e : b.events) EXPECT_EQ(groups[e], b.group);
  }
  cfg.event_clusters = ds.events.size() + 1;
  EXPECT_THROW(run(cfg), InvalidInput);
}

TEST_F(RouterTest, KeOneMatchesNoEventClustering) {
  auto a = harness::preset("A3");
  auto b = a;
  b.event_clusters = 1;
  const auto ra = run(a), rb = run(b);
  EXPECT_EQ(ra.usage.invocations, rb.usage.invocations);
  for (std::size_t i = 0; i < ra.decisions.size(); ++i) EXPECT_EQ(ra.decisions[i].matched, rb.decisions[i].matched);
}

TEST_F(RouterTest, DispatchOrderDoesNotMatter) {
  auto cfg = harness::preset("A3");
  cfg.parallel = 3;
  const auto base = run(cfg);
  std::vector<std::size_t> order(base.batches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  const auto rev = run(cfg, MatchOptions{order});
  EXPECT_EQ(rev.usage.latency_s, base.usage.latency_s);
  EXPECT_EQ(rev.usage.prompt_tokens, base.usage.prompt_tokens);
  for (std::size_t i = 0; i < base.decisions.size(); ++i) EXPECT_EQ(rev.decisions[i].matched, base.decisions[i].matched);

  order.pop_back();
  EXPECT_THROW(run(cfg, MatchOptions{order}), InvalidInput);
}

TEST_F(RouterTest, ParallelEqualsSerial) {
  auto serial = harness::preset("A1");
  auto parallel = serial;
  parallel.parallel = 4;
  const auto a = run(serial), b = run(parallel);
  EXPECT_EQ(a.usage.invocations, b.usage.invocations);
  EXPECT_EQ(a.usage.response_tokens, b.usage.response_tokens);
  EXPECT_LE(b.usage.latency_s, a.usage.latency_s);
  for (std::size_t i = 0; i < a.decisions.size(); ++i) EXPECT_EQ(a.decisions[i].matched, b.decisions[i].matched);
}

TEST(Router, OversizedClusterTruncatesOrThrows) {
  std::vector<Subscription> subs;
  for (int i = 0; i < 43; ++i) subs.push_back(sub("s" + std::to_string(i), "topic w" + std::to_string(i)));
  const SubscriptionSet set(subs);
  const std::vector<Event> events{event("e1", "topic w42", {"s42"}), event("e2", "topic w1", {"s1"})};
  HashedTfEmbedder embedder;
  auto backend = std::make_shared<SimulatedBackend>(SimulatedBackend::oracle_config());
  auto cfg = harness::preset("A0");

  auto clusters = optimize_subscriptions(set, embedder, cfg, homogeneous(backend));
  EXPECT_THROW(match_events(events, clusters, embedder, cfg), SubscriptionsExceedWindow);

  cfg.truncate_to_fit = true;
  const auto r = match_events(events, clusters, embedder, cfg);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].n_subs, 42);
  EXPECT_EQ(r.clusters[0].truncated, 1);
  EXPECT_EQ(r.clusters[0].b_max, 1);
  EXPECT_TRUE(r.decisions[0].matched.empty());  // s42 was cut
  EXPECT_EQ(r.decisions[1].matched, (std::vector<SubscriptionId>{"s1"}));
}

TEST(Router, LatencyIsMakespan) {
  std::vector<Subscription> subs{sub("a", "x")};
  std::vector<Event> events;
  for (int i = 0; i < 10; ++i) events.push_back(event("e" + std::to_string(i), "x"));
  HashedTfEmbedder embedder;
  SimulatedBackendConfig sc = SimulatedBackend::oracle_config();
  sc.latency_base = 1.0;
  sc.latency_per_token = 0.0;
  auto backend = std::make_shared<SimulatedBackend>(sc);
  auto cfg = harness::preset("A0");
  cfg.budget = TokenBudget{.window = 1000, .t_inst = 100, .t_s = 100, .t_e = 200, .t_resp = 100};
  cfg.parallel = 3;
  auto clusters = optimize_subscriptions(SubscriptionSet(subs), embedder, cfg, homogeneous(backend));
  const auto r = match_events(events, clusters, embedder, cfg);
  EXPECT_EQ(r.clusters[0].b_max, 3);
  EXPECT_EQ(r.usage.invocations, 4);
  EXPECT_DOUBLE_EQ(r.usage.latency_s, 2.0);
  EXPECT_DOUBLE_EQ(r.usage.mean_call_latency_s, 1.0);
}

TEST(Router, ConfigValidation) {
  PipelineConfig cfg;
  cfg.kappa = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.parallel = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.prefilter_enabled = true;
  cfg.tau = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  HashedTfEmbedder embedder;
  std::vector<ClusterState> none;
  EXPECT_THROW(match_events({}, none, embedder, PipelineConfig{}), InvalidInput);
}

TEST(Router, CompoundCentroidFallsBackToSources) {
  const auto vecs = PrecomputedEmbeddings::parse(
      "{\"text\": \"x\", \"vector\": [1, 0]}\n{\"text\": \"y\", \"vector\": [0, 1]}\n");
  const DescriptionMap d({{"a", "x"}, {"b", "y"}});
  const auto merged = merge_subscriptions(sub("a", "x"), sub("b", "y"));
  const auto v = embed_subscription(vecs, merged, d);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(v[1], std::sqrt(0.5), 1e-12);
  EXPECT_THROW(embed_subscription(vecs, sub("c", "z"), d), MissingEmbedding);
}

}  // namespace
}  // namespace semroute
