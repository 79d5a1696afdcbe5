#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "semroute/errors.hpp"
#include "semroute/harness.hpp"

namespace semroute::harness {
namespace {

std::filesystem::path data_dir() {
  const char* dir = std::getenv("SEMROUTE_TEST_DATA");
  return dir ? std::filesystem::path(dir) : std::filesystem::path("tests/data");
}

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

TEST(Dataset, LoadsTinyFixture) {
  const auto ds = load_dataset(data_dir() / "tiny.jsonl");
  EXPECT_EQ(ds.subscriptions.size(), 4u);
  EXPECT_EQ(ds.events.size(), 6u);
  EXPECT_EQ(ds.subscriptions[3].subscribers.size(), 2u);
  EXPECT_TRUE(ds.events[3].ground_truth.empty());
}

TEST(Dataset, ParseErrorsCarryLineNumbers) {
  const std::string ok = R"({"type": "subscription", "id": "a", "description": "x", "subscribers": ["u"]})";
  try {
    parse(ok + "\n\n{broken\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse(R"({"type": "pony"})"), ParseError);
  EXPECT_THROW(parse(R"({"type": "event", "id": "e", "text": "t"})"), ParseError);
  EXPECT_THROW(parse(R"({"type": "subscription", "id": "a", "description": 3, "subscribers": []})"), ParseError);
  EXPECT_THROW(parse("[1, 2]"), ParseError);
}

TEST(Dataset, ValidationFailures) {
  const std::string a = R"({"type": "subscription", "id": "a", "description": "x", "subscribers": ["u"]})";
  EXPECT_THROW(parse(a + "\n" + a), DatasetInvalid);
  EXPECT_THROW(parse(a + "\n" + R"({"type": "event", "id": "e", "text": "t", "ground_truth": ["zz"]})"),
               DatasetInvalid);
  EXPECT_THROW(parse(R"({"type": "subscription", "id": "a+b", "description": "x", "subscribers": ["u"]})"),
               DatasetInvalid);
  EXPECT_THROW(load_dataset(data_dir() / "does-not-exist.jsonl"), InvalidInput);
}

TEST(Dataset, WriteThenParseRoundTrips) {
  const auto ds = generate_synthetic({.n_subscriptions = 8, .n_events = 20, .near_duplicate_pairs = 2});
  std::stringstream ss;
  write_dataset(ss, ds);
  const auto back = parse_dataset(ss);
  ASSERT_EQ(back.subscriptions.size(), ds.subscriptions.size());
  ASSERT_EQ(back.events.size(), ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    EXPECT_EQ(back.events[i].text, ds.events[i].text);
    EXPECT_EQ(back.events[i].ground_truth, ds.events[i].ground_truth);
  }
}

TEST(Synthetic, ShapeAndDeterminism) {
  const SyntheticSpec spec{.n_subscriptions = 19, .n_events = 100, .seed = 11};
  const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  ASSERT_EQ(a.subscriptions.size(), 19u);
  ASSERT_EQ(a.events.size(), 100u);
  EXPECT_EQ(a.subscriptions[0].id, "s1");
  EXPECT_EQ(*a.subscriptions[0].subscribers.begin(), "u1");
  std::set<SubscriptionId> covered;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].text, b.events[i].text);
    EXPECT_GE(a.events[i].ground_truth.size(), 1u);
    EXPECT_LE(a.events[i].ground_truth.size(), 3u);
    covered.insert(a.events[i].ground_truth.begin(), a.events[i].ground_truth.end());
  }
  EXPECT_EQ(covered.size(), 19u);
  EXPECT_TRUE(a.subscriptions.descriptions().injective());
}

TEST(Synthetic, NearDuplicatePairsMerge) {
  const auto ds = generate_synthetic({.n_subscriptions = 6, .n_events = 10, .near_duplicate_pairs = 2});
  SimulatedBackend backend(SimulatedBackend::oracle_config());
  const auto r = backend.cover_merge(ds.subscriptions.subscriptions());
  EXPECT_EQ(r.payload.merges, (std::vector<IndexPair>{{1, 2}, {3, 4}}));
  EXPECT_THROW(generate_synthetic({.n_subscriptions = 3, .near_duplicate_pairs = 2}), InvalidInput);
}

TEST(Sweep, CountsAndNames) {
  const auto base = generate_synthetic({.n_subscriptions = 19, .n_events = 5}).subscriptions;
  const auto sets = generate_duplication_sweep({.base = base, .target_sizes = {19, 50, 2000}});
  ASSERT_EQ(sets.size(), 3u);
  EXPECT_EQ(sets[0].size(), 19u);
  EXPECT_EQ(sets[1].size(), 50u);
  EXPECT_EQ(sets[1].descriptions().distinct_descriptions(), 19u);
  EXPECT_EQ(sets[1][19].id, "s1_dup1");
  EXPECT_EQ(*sets[1][19].subscribers.begin(), "u_s1_dup1");

  std::map<std::string, std::size_t> per_desc;
  for (const auto& s : sets[2]) ++per_desc[s.description];
  for (const auto& [d, n] : per_desc) {
    EXPECT_TRUE(n == 105 || n == 106) << n;
  }
  EXPECT_THROW(generate_duplication_sweep({.base = base, .target_sizes = {10}}), InvalidInput);
  EXPECT_THROW(generate_duplication_sweep({.base = SubscriptionSet{}, .target_sizes = {10}}), InvalidInput);
}

TEST(Subsample, RestrictsGroundTruth) {
  const auto ds = load_dataset(data_dir() / "tiny.jsonl");
  const auto sub = subsample(ds, 2);
  EXPECT_EQ(sub.subscriptions.size(), 2u);
  EXPECT_EQ(sub.events[0].ground_truth, (std::set<SubscriptionId>{"s1"}));
  EXPECT_TRUE(sub.events[2].ground_truth.empty());
}

ExperimentSpec tiny_spec(const std::string& name) {
  ExperimentSpec spec;
  spec.config = preset(name);
  spec.dataset = load_dataset(data_dir() / "tiny.jsonl");
  spec.backends = {std::make_shared<SimulatedBackend>(SimulatedBackend::oracle_config())};
  return spec;
}

TEST(Experiment, OracleA0IsPerfect) {
  const auto r = run_experiment(tiny_spec("A0"));
  ASSERT_EQ(r.seeds.size(), kDefaultSeeds.size());
  EXPECT_EQ(r.failures(), 0u);
  for (const auto& s : r.seeds) {
    EXPECT_EQ(s.id_score.f1, 1.0);
    EXPECT_EQ(s.desc_score.f1, 1.0);
    EXPECT_EQ(s.n_events, 6u);
    EXPECT_EQ(s.usage.invocations, 1);
  }
}

TEST(Experiment, A2CoversIdenticalDescriptions) {
  const auto r = run_experiment(tiny_spec("A2"));
  for (const auto& s : r.seeds) {
    EXPECT_DOUBLE_EQ(s.rho, 0.75);
    EXPECT_EQ(s.desc_score.f1, 1.0);
    EXPECT_LT(s.id_score.f1, 1.0);  // s3 now answers as s1
  }
}

TEST(Experiment, ResultsCsvIsReproducible) {
  auto spec = tiny_spec("A3");
  spec.config.k = 2;
  std::stringstream a, b, c;
  write_results_csv(a, {run_experiment(spec)});
  write_results_csv(b, {run_experiment(spec)});
  spec.concurrent_seeds = true;
  write_results_csv(c, {run_experiment(spec)});
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());

  std::ifstream golden(data_dir() / "golden_results_A3.csv");
  ASSERT_TRUE(golden) << "missing golden file";
  std::stringstream want;
  want << golden.rdbuf();
  EXPECT_EQ(a.str(), want.str());
}

// Throws on the second call it receives.
class FlakyBackend final : public MatchBackend {
 public:
  std::string name() const override { return "flaky"; }
  Pricing pricing() const override { return {}; }
  std::int64_t native_window() const override { return 4096; }
  CallResult<CoverMergeDecision> cover_merge(std::span<const Subscription>) const override { return {}; }
  CallResult<MatchResponse> match(std::span<const Subscription> subs, std::span<const Event> events,
                                  std::int64_t kappa, const TokenBudget& budget) const override {
    if (++calls_ == 2) throw BackendUnavailable("connection reset");
    return inner_.match(subs, events, kappa, budget);
  }

 private:
  SimulatedBackend inner_{SimulatedBackend::oracle_config()};
  mutable int calls_ = 0;
};

TEST(Experiment, FailedSeedIsRecorded) {
  auto spec = tiny_spec("A0");
  spec.backends = {std::make_shared<FlakyBackend>()};
  spec.seeds = {1, 2, 3};
  const auto r = run_experiment(spec);
  EXPECT_EQ(r.failures(), 1u);
  EXPECT_TRUE(r.seeds[1].failed);
  EXPECT_NE(r.seeds[1].error.find("connection reset"), std::string::npos);

  std::stringstream out;
  write_results_csv(out, {r});
  const auto text = out.str();
  EXPECT_NE(text.find("A0,mean(n=2),id,"), std::string::npos);
  EXPECT_NE(text.find("A0,2,failed,,,,,,,,,,\n"), std::string::npos);

  std::stringstream log;
  write_decisions_jsonl(log, {r});
  EXPECT_NE(log.str().find("\"error\":\"connection reset\""), std::string::npos);
}

TEST(Experiment, MultiBackendEvaluatesOnHeldOutEvents) {
  auto spec = tiny_spec("A1");
  spec.dataset = generate_synthetic({.n_subscriptions = 19, .n_events = 100, .seed = 4});
  spec.config.k = 3;
  auto poor = SimulatedBackend::collapse_config(1);
  poor.name = "sim:poor";
  spec.backends.push_back(std::make_shared<SimulatedBackend>(poor));
  spec.seeds = {42};
  spec.calibration_fraction = 0.2;
  const auto r = run_experiment(spec);
  ASSERT_EQ(r.failures(), 0u) << r.seeds[0].error;
  EXPECT_LT(r.seeds[0].n_events, 100u);
  EXPECT_FALSE(r.seeds[0].calibration.empty());
  for (const auto& [c, b] : r.seeds[0].assignment) EXPECT_EQ(b, "sim:oracle");
}

TEST(Invariants, CleanFixturesPass) {
  for (const char* name : {"oracle", "collapse"}) {
    const auto report = check_invariants(build_fixture(name));
    EXPECT_TRUE(report.passed()) << name;
    EXPECT_EQ(report.checks.size(), 5u);
  }
}

TEST(Invariants, EachBrokenFixtureFailsOnlyItsOwn) {
  for (int i = 1; i <= 5; ++i) {
    const auto name = "I" + std::to_string(i);
    const auto report = check_invariants(build_fixture("broken-" + name));
    EXPECT_EQ(report.failed_names(), (std::vector<std::string>{name}));
  }
  EXPECT_THROW(build_fixture("nope"), InvalidInput);
}

TEST(Invariants, CollapseSweepIsMonotone) {
  const auto a = build_fixture("collapse");
  ASSERT_EQ(a.i2_empty_rate.size(), 3u);
  EXPECT_LT(a.i2_empty_rate[0].value, a.i2_empty_rate[1].value);
  EXPECT_LT(a.i2_empty_rate[1].value, a.i2_empty_rate[2].value);
}

}  // namespace
}  // namespace semroute::harness
