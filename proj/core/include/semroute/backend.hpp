#pragma once
// The matcher abstraction. A backend answers the two prompt kinds
// (cover/merge and event matching) with structured decisions and meters
// every call. Two implementations: a deterministic simulator with a
// discrimination-capacity collapse model, and a JSON-over-HTTP client.

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semroute/embedding.hpp"
#include "semroute/model.hpp"
#include "semroute/prompts.hpp"

namespace semroute {

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t response_tokens = 0;
  double latency_s = 0.0;
  std::int64_t calls = 0;

  Usage& operator+=(const Usage& o) {
    prompt_tokens += o.prompt_tokens;
    response_tokens += o.response_tokens;
    latency_s += o.latency_s;
    calls += o.calls;
    return *this;
  }
};

struct Pricing {
  double input = 0.0;   // per prompt token
  double output = 0.0;  // per response token
};

using IndexPair = std::pair<std::size_t, std::size_t>;  // 1-based

struct CoverMergeDecision {
  std::vector<IndexPair> covers;  // (i, j): i subsumes j
  std::vector<IndexPair> merges;
  bool empty() const { return covers.empty() && merges.empty(); }
};

struct MatchResponse {
  std::vector<std::pair<std::size_t, SubscriptionId>> matches;  // (event idx 1-based, id)
};

template <typename T>
struct CallResult {
  T payload;
  Usage usage;
};

class MatchBackend {
 public:
  virtual ~MatchBackend() = default;
  virtual std::string name() const = 0;
  virtual Pricing pricing() const = 0;
  virtual std::int64_t native_window() const = 0;

  virtual CallResult<CoverMergeDecision> cover_merge(std::span<const Subscription> subs) const = 0;
  // The caller is responsible for keeping the batch inside its budget.
  virtual CallResult<MatchResponse> match(std::span<const Subscription> subs,
                                          std::span<const Event> events, std::int64_t kappa,
                                          const TokenBudget& budget) const = 0;
};

// Strict decoding of the two response schemas. Throw BackendProtocolError.
CoverMergeDecision parse_cover_merge_response(std::string_view json_text, std::size_t n_subs);
MatchResponse parse_match_response(std::string_view json_text, std::size_t batch_size,
                                   std::int64_t kappa);
std::string to_json(const CoverMergeDecision& d);
std::string to_json(const MatchResponse& r);

struct SimulatedBackendConfig {
  std::string name = "sim";
  std::uint64_t seed = 0;
  // How many atomic subscriptions one prompt can discriminate between.
  std::int64_t discrimination_capacity = std::numeric_limits<std::int64_t>::max();
  double flip_noise = 0.0;
  double hallucination_rate = 0.0;
  double latency_base = 0.5;
  double latency_per_token = 1e-4;
  Pricing pricing;
  std::int64_t native_window = 4096;
  double merge_threshold = 0.95;
  // Used for the merge rule; defaults to HashedTfEmbedder.
  std::shared_ptr<const EmbeddingProvider> embedder;

  // Throws InvalidInput when a probability is outside [0, 1] or D < 1.
  void validate() const;
};

// Deterministic stand-in for an LLM.
//
// cover_merge: covers every (i, j), i < j, with identical descriptions
// (the first occurrence is the coverer); merges every other pair whose
// description embeddings have cosine >= merge_threshold.
//
// match: per event, with randomness keyed on (seed, event id, prompt ID list),
//   load   = atomic subscriptions represented by the prompt
//   empty prediction with probability max(0, 1 - D / load)
//   else vocabulary = first ceil(min(1, D / load) * |S'|) prompt entries,
//   correct = vocabulary entries representing a ground-truth ID,
//   then flip noise, hallucination, truncation to kappa.
class SimulatedBackend final : public MatchBackend {
 public:
  explicit SimulatedBackend(SimulatedBackendConfig cfg);

  static SimulatedBackendConfig oracle_config(std::uint64_t seed = 0);
  static SimulatedBackendConfig collapse_config(std::int64_t capacity, std::uint64_t seed = 7);

  std::string name() const override { return cfg_.name; }
  Pricing pricing() const override { return cfg_.pricing; }
  std::int64_t native_window() const override { return cfg_.native_window; }
  const SimulatedBackendConfig& config() const { return cfg_; }

  CallResult<CoverMergeDecision> cover_merge(std::span<const Subscription> subs) const override;
  CallResult<MatchResponse> match(std::span<const Subscription> subs, std::span<const Event> events,
                                  std::int64_t kappa, const TokenBudget& budget) const override;

  // Probability of an empty prediction for a prompt representing `load`
  // atomic subscriptions.
  double empty_probability(std::size_t load) const;
  std::size_t vocabulary_size(std::size_t prompt_size, std::size_t load) const;

 private:
  SimulatedBackendConfig cfg_;
};

struct HttpBackendConfig {
  std::string name = "http";
  std::string url;  // http://host[:port]/path
  std::string api_key_env = "SEMROUTE_API_KEY";
  Pricing pricing;
  std::int64_t native_window = 4096;
  double timeout_s = 120.0;
  // Token estimator for the usage record; defaults to ceil(chars / 4).
  std::function<std::int64_t(std::string_view)> tokenizer;
};

// POSTs {"system", "user", "max_tokens", "temperature": 0} and expects the
// response schema in the body, either as the top-level object or as a JSON
// string under "content" / "text". One retry on an unparseable reply.
class HttpBackend final : public MatchBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  std::string name() const override { return cfg_.name; }
  Pricing pricing() const override { return cfg_.pricing; }
  std::int64_t native_window() const override { return cfg_.native_window; }

  CallResult<CoverMergeDecision> cover_merge(std::span<const Subscription> subs) const override;
  CallResult<MatchResponse> match(std::span<const Subscription> subs, std::span<const Event> events,
                                  std::int64_t kappa, const TokenBudget& budget) const override;

 private:
  struct RawReply {
    std::string body;
    double latency_s;
  };
  RawReply post(const Prompt& p) const;
  std::int64_t count_tokens(std::string_view text) const;

  HttpBackendConfig cfg_;
  std::string host_;
  std::string path_;
};

// Forwards to another backend and counts calls; handy for asserting that a
// code path made no backend calls.
class CountingBackend final : public MatchBackend {
 public:
  explicit CountingBackend(std::shared_ptr<const MatchBackend> inner) : inner_(std::move(inner)) {}

  std::string name() const override { return inner_->name(); }
  Pricing pricing() const override { return inner_->pricing(); }
  std::int64_t native_window() const override { return inner_->native_window(); }
  CallResult<CoverMergeDecision> cover_merge(std::span<const Subscription> subs) const override {
    ++cover_merge_calls_;
    return inner_->cover_merge(subs);
  }
  CallResult<MatchResponse> match(std::span<const Subscription> subs, std::span<const Event> events,
                                  std::int64_t kappa, const TokenBudget& budget) const override {
    ++match_calls_;
    return inner_->match(subs, events, kappa, budget);
  }

  std::int64_t cover_merge_calls() const { return cover_merge_calls_.load(); }
  std::int64_t match_calls() const { return match_calls_.load(); }

 private:
  std::shared_ptr<const MatchBackend> inner_;
  mutable std::atomic<std::int64_t> cover_merge_calls_{0};
  mutable std::atomic<std::int64_t> match_calls_{0};
};

// "sim:oracle", "sim:collapse,D=150,seed=7", "sim,D=40,noise=0.1,halluc=0.05",
// "http:http://host:port/path". Throws InvalidInput on an unknown spec.
std::shared_ptr<MatchBackend> make_backend(std::string_view spec);

}  // namespace semroute
