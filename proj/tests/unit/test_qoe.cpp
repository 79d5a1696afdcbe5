#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "semroute/errors.hpp"
#include "semroute/harness.hpp"
#include "semroute/qoe.hpp"

namespace semroute::qoe {
namespace {

using test::event;

CalibrationRecord rec(std::size_t cluster, std::string name, double f1, double cost, double lat) {
  CalibrationRecord r;
  r.cluster_id = cluster;
  r.backend_name = std::move(name);
  r.f1_hat = f1;
  r.token_cost = cost;
  r.mean_latency = lat;
  return r;
}

// A: more accurate, dearer, slower. B: the reverse.
const std::vector<CalibrationRecord> kPair{rec(0, "A", 0.9, 2e-3, 2.0), rec(0, "B", 0.6, 5e-4, 0.8)};

TEST(QoeScore, HandExample) {
  auto s = qoe_score(kPair, Weights::accuracy_first());
  EXPECT_NEAR(s["A"].score, 0.70, 1e-12);
  EXPECT_NEAR(s["B"].score, 0.30, 1e-12);
  EXPECT_EQ(argmax(s), "A");

  s = qoe_score(kPair, Weights::cost_first());
  EXPECT_NEAR(s["A"].score, 0.15, 1e-12);
  EXPECT_NEAR(s["B"].score, 0.85, 1e-12);
  EXPECT_EQ(argmax(s), "B");
  EXPECT_EQ(s["B"].cost, 1.0);
  EXPECT_EQ(s["B"].latency, 1.0);
  EXPECT_EQ(s["B"].f1, 0.0);
}

TEST(QoeScore, DominantBackend) {
  const std::vector<CalibrationRecord> r{rec(0, "A", 0.9, 5e-4, 2.0), rec(0, "B", 0.6, 2e-3, 0.8)};
  auto s = qoe_score(r, Weights::accuracy_first());
  EXPECT_NEAR(s["A"].score, 0.85, 1e-12);
  EXPECT_NEAR(s["B"].score, 0.15, 1e-12);
}

TEST(QoeScore, SingleCandidateAndConstants) {
  const auto s = qoe_score({rec(0, "only", 0.4, 1.0, 1.0)}, Weights::balanced());
  EXPECT_DOUBLE_EQ(s.at("only").score, 0.5);
}

TEST(QoeScore, TiesGoToSmallestName) {
  const std::vector<CalibrationRecord> r{rec(0, "zeta", 0.5, 1, 1), rec(0, "alpha", 0.5, 1, 1),
                                         rec(0, "mid", 0.5, 1, 1)};
  EXPECT_EQ(argmax(qoe_score(r, Weights::balanced())), "alpha");
}

TEST(QoeScore, ZeroF1IsFilteredOut) {
  const std::vector<CalibrationRecord> r{rec(0, "cheap", 0.0, 0.0, 0.0), rec(0, "ok", 0.3, 9, 9)};
  const auto s = qoe_score(r, Weights::cost_first());
  EXPECT_EQ(s.count("cheap"), 0u);
  EXPECT_EQ(argmax(s), "ok");
  EXPECT_THROW(qoe_score({rec(0, "x", 0.0, 1, 1)}, Weights::balanced()), NoViableBackend);
}

TEST(QoeScore, ScaleInvariant) {
  auto scaled = kPair;
  for (auto& r : scaled) {
    r.token_cost *= 1000.0;
    r.mean_latency *= 0.01;
  }
  const auto a = qoe_score(kPair, Weights::balanced());
  const auto b = qoe_score(scaled, Weights::balanced());
  for (const auto& [name, s] : a) EXPECT_NEAR(s.score, b.at(name).score, 1e-12);
}

TEST(Weights, PresetsAndValidation) {
  EXPECT_DOUBLE_EQ(Weights::preset("cost_first").beta, 0.70);
  EXPECT_THROW(Weights::preset("fast"), InvalidInput);
  EXPECT_THROW((Weights{0.5, 0.5, 0.5}.validate()), InvalidInput);
  EXPECT_THROW((Weights{-0.1, 0.6, 0.5}.validate()), InvalidInput);
  EXPECT_NO_THROW(Weights::balanced().validate());
}

TEST(Assign, Strategies) {
  const std::vector<std::size_t> clusters{3, 0, 2, 1};
  const auto rr = assign(RoundRobin{{"b0", "b1"}}, clusters, {});
  EXPECT_EQ(rr, (std::map<std::size_t, std::string>{{0, "b0"}, {1, "b1"}, {2, "b0"}, {3, "b1"}}));
  const auto h = assign(Homogeneous{"x"}, clusters, {});
  for (const auto& [c, b] : h) EXPECT_EQ(b, "x");
  EXPECT_THROW(assign(RoundRobin{{}}, clusters, {}), InvalidInput);
}

TEST(Assign, ClustersAreIndependent) {
  std::vector<CalibrationRecord> r = kPair;
  r.push_back(rec(1, "A", 0.1, 2e-3, 2.0));
  r.push_back(rec(1, "B", 0.9, 5e-4, 0.8));
  const auto a = assign(QoeOptimised{Weights::accuracy_first()}, {0, 1}, r);
  EXPECT_EQ(a.at(0), "A");
  EXPECT_EQ(a.at(1), "B");

  // Changing cluster 1's records leaves cluster 0 alone.
  r[3].f1_hat = 0.05;
  EXPECT_EQ(assign(QoeOptimised{Weights::accuracy_first()}, {0, 1}, r).at(0), "A");
  EXPECT_THROW(assign(QoeOptimised{}, {0, 7}, r), NoViableBackend);
}

TEST(FilterDisagreements, FlagsPerClusterDrops) {
  const std::vector<CalibrationRecord> r{rec(0, "A", 0.0, 1, 1), rec(1, "A", 0.5, 1, 1), rec(0, "B", 0.0, 1, 1),
                                         rec(1, "B", 0.0, 1, 1)};
  const auto d = filter_disagreements(r);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], (std::pair<std::size_t, std::string>{0, "A"}));
}

std::map<std::size_t, std::vector<Event>> numbered_events(std::size_t clusters, std::size_t per) {
  std::map<std::size_t, std::vector<Event>> out;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t i = 0; i < per; ++i) out[c].push_back(event("c" + std::to_string(c) + "e" + std::to_string(i), "x"));
  }
  return out;
}

TEST(Split, SizesAndDisjointness) {
  const auto events = numbered_events(3, 100);
  auto s = split_calibration(events, 0.07, 1);
  EXPECT_TRUE(s.disjoint);
  for (const auto& [c, cs] : s.clusters) {
    EXPECT_EQ(cs.cal.size(), 7u);
    EXPECT_EQ(cs.eval.size(), 93u);
  }
  EXPECT_TRUE(overlaps(s).empty());

  s = split_calibration(numbered_events(1, 10), 0.1, 1);
  EXPECT_EQ(s.clusters[0].cal.size(), 1u);
  s = split_calibration(numbered_events(1, 3), 0.1, 1);
  EXPECT_EQ(s.clusters[0].cal.size(), 1u);  // ceil(0.3)
}

TEST(Split, FullFractionReusesEverything) {
  const auto s = split_calibration(numbered_events(2, 5), 1.0, 1);
  EXPECT_FALSE(s.disjoint);
  EXPECT_EQ(s.clusters.at(0).cal.size(), 5u);
  EXPECT_EQ(s.clusters.at(0).eval.size(), 5u);
  EXPECT_EQ(overlaps(s).at(1).size(), 5u);
}

TEST(Split, SeededAndValidated) {
  const auto events = numbered_events(2, 50);
  const auto a = split_calibration(events, 0.2, 9), b = split_calibration(events, 0.2, 9);
  for (std::size_t i = 0; i < a.clusters.at(0).cal.size(); ++i) {
    EXPECT_EQ(a.clusters.at(0).cal[i].id, b.clusters.at(0).cal[i].id);
  }
  EXPECT_THROW(split_calibration(events, 0.0, 1), InvalidInput);
  EXPECT_THROW(split_calibration(events, 1.5, 1), InvalidInput);
}

TEST(RecordsCsv, RoundTrip) {
  auto r = kPair;
  r[0].n_cal_events = 12;
  std::stringstream ss;
  write_records_csv(ss, r);
  const auto back = read_records_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].backend_name, "A");
  EXPECT_EQ(back[0].f1_hat, 0.9);
  EXPECT_EQ(back[0].token_cost, 2e-3);
  EXPECT_EQ(back[0].n_cal_events, 12u);
  std::stringstream bad("cluster,backend,f1_hat,mean_latency,token_cost\nx,A,1,1,1\n");
  EXPECT_THROW(read_records_csv(bad), ParseError);
}

TEST(Calibrate, HigherCapacityWinsEverywhere) {
  const auto ds = harness::generate_synthetic({.n_subscriptions = 19, .n_events = 200, .seed = 3});
  HashedTfEmbedder embedder;
  PipelineConfig cfg = harness::preset("A1");
  cfg.k = 2;
  auto good = std::make_shared<SimulatedBackend>(SimulatedBackend::oracle_config());
  auto poor_cfg = SimulatedBackend::collapse_config(2);
  poor_cfg.name = "sim:collapse";
  auto poor = std::make_shared<SimulatedBackend>(poor_cfg);
  auto clusters = optimize_subscriptions(ds.subscriptions, embedder, cfg, homogeneous(good));

  std::map<std::size_t, std::vector<Event>> per_cluster;
  for (const auto& e : ds.events) {
    std::size_t best = 0;
    double best_sim = -2.0;
    const auto v = embedder.embed(e.text);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const double sim = cosine(v, clusters[c].centroid);
      if (sim > best_sim) {
        best_sim = sim;
        best = clusters[c].id;
      }
    }
    per_cluster[best].push_back(e);
  }
  const auto split = split_calibration(per_cluster, 0.5, 1);
  const std::vector<std::shared_ptr<const MatchBackend>> backends{good, poor};
  const auto records = calibrate(clusters, backends, split, embedder, cfg);
  ASSERT_EQ(records.size(), 2 * split.clusters.size());

  std::map<std::size_t, std::map<std::string, double>> f1;
  for (const auto& r : records) f1[r.cluster_id][r.backend_name] = r.f1_hat;
  std::vector<std::size_t> ids;
  std::set<std::size_t> strict;
  for (const auto& [c, by] : f1) {
    // Clusters no larger than D are out of reach of the collapse.
    if (clusters[c].compressed.size() > 2) {
      EXPECT_GT(by.at("sim:oracle"), by.at("sim:collapse")) << "cluster " << c;
      strict.insert(c);
    } else {
      EXPECT_GE(by.at("sim:oracle"), by.at("sim:collapse")) << "cluster " << c;
    }
    ids.push_back(c);
  }
  EXPECT_FALSE(strict.empty());
  // Tied clusters fall to the smaller name; the rest must pick the oracle.
  for (const auto& [c, b] : assign(QoeOptimised{Weights::balanced()}, ids, records)) {
    if (strict.count(c)) EXPECT_EQ(b, "sim:oracle") << "cluster " << c;
  }
}

}  // namespace
}  // namespace semroute::qoe
