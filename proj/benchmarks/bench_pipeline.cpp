#include <benchmark/benchmark.h>

#include "semroute/clustering.hpp"
#include "semroute/covermerge.hpp"
#include "semroute/harness.hpp"
#include "semroute/router.hpp"

namespace {

using namespace semroute;

void BM_KMeans(benchmark::State& state) {
  const auto ds = harness::generate_synthetic({.n_subscriptions = static_cast<std::size_t>(state.range(0)),
                                               .n_events = 1});
  const HashedTfEmbedder embedder;
  std::vector<Vector> points;
  for (const auto& s : ds.subscriptions) points.push_back(embedder.embed(s.description));
  for (auto _ : state) {
    auto c = kmeans(points, KMeansConfig{.k = 19, .seed = 42});
    benchmark::DoNotOptimize(c.assignments.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Arg(100)->Arg(1000);

void BM_CoverAndMerge(benchmark::State& state) {
  const auto base = harness::generate_synthetic({.n_subscriptions = 19, .n_events = 1, .near_duplicate_pairs = 5});
  const auto set = harness::generate_duplication_sweep(
                       {.base = base.subscriptions, .target_sizes = {static_cast<std::size_t>(state.range(0))}})
                       .front();
  SimulatedBackend backend(SimulatedBackend::oracle_config());
  for (auto _ : state) {
    auto r = cover_and_merge(set, backend);
    benchmark::DoNotOptimize(r.rho);
  }
}
BENCHMARK(BM_CoverAndMerge)->Arg(50)->Arg(200);

void BM_MatchPipeline(benchmark::State& state) {
  const auto ds = harness::generate_synthetic({.n_subscriptions = 19, .n_events = 1000, .seed = 7});
  const HashedTfEmbedder embedder;
  auto backend = std::make_shared<SimulatedBackend>(SimulatedBackend::oracle_config());
  auto cfg = harness::preset(state.range(0) == 0 ? "A0" : "A3");
  cfg.parallel = static_cast<std::size_t>(state.range(1));
  auto clusters = optimize_subscriptions(ds.subscriptions, embedder, cfg, homogeneous(backend));
  for (auto _ : state) {
    auto run = match_events(ds.events, clusters, embedder, cfg);
    benchmark::DoNotOptimize(run.usage.invocations);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.events.size()));
}
BENCHMARK(BM_MatchPipeline)->Args({0, 1})->Args({1, 1})->Args({1, 4});

}  // namespace

BENCHMARK_MAIN();
