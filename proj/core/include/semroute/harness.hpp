#pragma once
// Datasets, synthetic generators, ablation presets, the multi-seed
// experiment runner and the regression invariants I1-I5.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semroute/backend.hpp"
#include "semroute/costmodel.hpp"
#include "semroute/embedding.hpp"
#include "semroute/metrics.hpp"
#include "semroute/model.hpp"
#include "semroute/qoe.hpp"
#include "semroute/router.hpp"

namespace semroute::harness {

inline const std::vector<std::uint64_t> kDefaultSeeds{42, 123, 456, 789, 1024};

struct Dataset {
  SubscriptionSet subscriptions;
  std::vector<Event> events;
};

// JSONL, one object per line:
//   {"type": "subscription", "id", "description", "subscribers": [...]}
//   {"type": "event", "id", "text", "ground_truth": [...]}
// Blank lines are skipped. Throws ParseError (with line number) on
// malformed lines and DatasetInvalid when validation finds violations.
Dataset parse_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Dataset& ds);

// Topic-per-subscription data. Each topic has its own vocabulary; events
// draw words from 1..max_truth topics and name those topics' IDs as ground
// truth. The first n_subscriptions events cover every subscription once.
//
// near_duplicate_pairs > 0 turns that many topics into pairs of
// subscriptions whose descriptions differ in one word (cosine above the
// simulator's merge threshold). Events hitting a pair name both members.
struct SyntheticSpec {
  std::size_t n_subscriptions = 19;
  std::size_t n_events = 100;
  std::size_t words_per_topic = 6;
  std::size_t max_truth = 3;  // atomic IDs per event, at most
  std::size_t near_duplicate_pairs = 0;
  std::uint64_t seed = 42;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

struct SweepSpec {
  SubscriptionSet base;
  std::vector<std::size_t> target_sizes;
  std::string rename_suffix = "_dup";
  std::uint64_t seed = 42;
};

// For each target, base followed by renamed copies (id + suffix + N, one
// fresh subscriber each) taken round-robin over the base until the size is
// reached. Throws InvalidInput on an empty base or a target below |base|.
std::vector<SubscriptionSet> generate_duplication_sweep(const SweepSpec& spec);

// First n subscriptions; ground truth restricted to them.
Dataset subsample(const Dataset& ds, std::size_t n);

// Ablation presets A0..A6 with k=19, tau=0.3, kappa=3. Throws
// InvalidInput for other names.
PipelineConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();

struct ExperimentSpec {
  PipelineConfig config;  // preset plus overrides; seed is set per run
  Dataset dataset;
  // One backend: homogeneous. Several: QoE assignment per seed, calibrated
  // on uncompressed clusters, scored on the evaluation split only.
  std::vector<std::shared_ptr<const MatchBackend>> backends;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::shared_ptr<const EmbeddingProvider> embedder;  // HashedTfEmbedder when null
  double calibration_fraction = 0.1;
  qoe::Weights weights = qoe::Weights::balanced();
  bool concurrent_seeds = false;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;

  metrics::EventScore id_score;
  metrics::EventScore desc_score;
  double fpr_id = 0.0;
  double fpr_desc = 0.0;
  RunUsage usage;
  double rho = 1.0;
  std::size_t merges_applied = 0;
  std::size_t n_events = 0;
  double empty_prediction_rate = 0.0;
  double cost_per_event = 0.0;
  std::vector<cost::ValidationCell> cells;
  std::vector<MatchDecision> decisions;
  std::map<std::size_t, std::string> assignment;
  std::vector<qoe::CalibrationRecord> calibration;
};

struct ExperimentResult {
  std::string preset;
  std::vector<SeedResult> seeds;  // in the order of ExperimentSpec::seeds

  std::size_t failures() const;
};

// Errors from one seed are recorded on that seed, never dropped.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Per-cluster predicted vs measured invocation cells for one match run.
std::vector<cost::ValidationCell> invocation_cells(const MatchRun& run, const PipelineConfig& cfg);

// preset,seed,variant,precision,recall,f1,fpr,invocations,rho,latency_s,
// prompt_tokens,response_tokens,cost_per_event
// One row per (seed, variant), then "mean(n=..)" and "ci95(n=..)" rows per
// variant over the seeds that completed. Failed seeds get a "failed" row.
void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results);
void write_cells_csv(std::ostream& out, const std::vector<ExperimentResult>& results);
void write_decisions_jsonl(std::ostream& out, const std::vector<ExperimentResult>& results);

// ---- invariants ----------------------------------------------------------

struct SweepPoint {
  std::size_t size = 0;
  double value = 0.0;
};

struct InvariantArtifacts {
  std::string name;
  // First |S| at which match prompts are truncated.
  std::int64_t truncation_onset = 0;
  std::vector<SweepPoint> i1_f1;          // A0 macro F1 over |S|
  std::vector<SweepPoint> i2_empty_rate;  // A4 empty-prediction rate over |S|
  std::vector<cost::ValidationCell> i3_cells;
  DescriptionMap i4_d;
  std::vector<Event> i4_events;
  std::vector<MatchDecision> i4_decisions;
  qoe::CalibrationSplit i5_split;
};

struct InvariantCheck {
  std::string name;  // "I1".."I5"
  bool passed = false;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;
  bool passed() const;
  std::vector<std::string> failed_names() const;
};

InvariantReport check_invariants(const InvariantArtifacts& a);

// Built-in fixtures: "oracle", "collapse" (D = 150), and the negative
// controls "broken-I1".."broken-I5", each of which breaks exactly one
// invariant. Throws InvalidInput for other names.
InvariantArtifacts build_fixture(std::string_view name);
const std::vector<std::string>& fixture_names();

}  // namespace semroute::harness
