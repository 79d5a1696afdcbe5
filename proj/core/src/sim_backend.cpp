#include <algorithm>
#include <cmath>
#include <set>

#include "semroute/backend.hpp"
#include "semroute/costmodel.hpp"
#include "semroute/errors.hpp"
#include "semroute/rng.hpp"

namespace semroute {

void SimulatedBackendConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(flip_noise)) throw InvalidInput("flip_noise must lie in [0, 1]");
  if (!prob(hallucination_rate)) throw InvalidInput("hallucination_rate must lie in [0, 1]");
  if (discrimination_capacity < 1) throw InvalidInput("discrimination capacity D must be >= 1");
  if (latency_base < 0.0 || latency_per_token < 0.0) throw InvalidInput("latencies must be >= 0");
}

SimulatedBackend::SimulatedBackend(SimulatedBackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (!cfg_.embedder) cfg_.embedder = std::make_shared<HashedTfEmbedder>();
}

SimulatedBackendConfig SimulatedBackend::oracle_config(std::uint64_t seed) {
  SimulatedBackendConfig cfg;
  cfg.name = "sim:oracle";
  cfg.seed = seed;
  return cfg;
}

SimulatedBackendConfig SimulatedBackend::collapse_config(std::int64_t capacity, std::uint64_t seed) {
  SimulatedBackendConfig cfg;
  cfg.name = "sim:collapse";
  cfg.seed = seed;
  cfg.discrimination_capacity = capacity;
  return cfg;
}

double SimulatedBackend::empty_probability(std::size_t load) const {
  if (load == 0) return 0.0;
  const double d = static_cast<double>(cfg_.discrimination_capacity);
  return std::max(0.0, 1.0 - d / static_cast<double>(load));
}

std::size_t SimulatedBackend::vocabulary_size(std::size_t prompt_size, std::size_t load) const {
  if (load == 0 || prompt_size == 0) return 0;
  const auto d = static_cast<std::uint64_t>(cfg_.discrimination_capacity);
  if (d >= load) return prompt_size;
  // ceil(D / load * |S'|) in integers; D < load here so this cannot overflow
  // for any realistic prompt.
  const std::uint64_t v = (d * prompt_size + load - 1) / load;
  return static_cast<std::size_t>(std::max<std::uint64_t>(v, 1));
}

CallResult<CoverMergeDecision> SimulatedBackend::cover_merge(std::span<const Subscription> subs) const {
  CallResult<CoverMergeDecision> out;
  const auto prompt = cover_merge_prompt(subs);
  out.usage.prompt_tokens = cost::estimate_tokens(prompt.system) + cost::estimate_tokens(prompt.user);

  const std::size_t n = subs.size();
  std::vector<bool> covered(n, false);
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (!covered[i] && subs[i].description == subs[j].description) {
        out.payload.covers.emplace_back(i + 1, j + 1);
        covered[j] = true;
        break;
      }
    }
  }

  if (cfg_.merge_threshold <= 1.0) {
    std::vector<Vector> vecs;
    vecs.reserve(n);
    for (const auto& s : subs) vecs.push_back(cfg_.embedder->embed(s.description));
    for (std::size_t i = 0; i < n; ++i) {
      if (covered[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (covered[j] || subs[i].description == subs[j].description) continue;
        if (cosine(vecs[i], vecs[j]) >= cfg_.merge_threshold) out.payload.merges.emplace_back(i + 1, j + 1);
      }
    }
  }

  const auto reply = to_json(out.payload);
  out.usage.response_tokens = cost::estimate_tokens(reply);
  out.usage.latency_s = cfg_.latency_base + cfg_.latency_per_token * static_cast<double>(out.usage.prompt_tokens);
  out.usage.calls = 1;
  return out;
}

CallResult<MatchResponse> SimulatedBackend::match(std::span<const Subscription> subs,
                                                  std::span<const Event> events, std::int64_t kappa,
                                                  const TokenBudget& budget) const {
  CallResult<MatchResponse> out;
  const std::size_t prompt_size = subs.size();

  std::uint64_t list_hash = 0x51ab'c0de'0000'0001ULL;
  std::size_t load = 0;
  std::vector<std::vector<SubscriptionId>> reps;
  reps.reserve(prompt_size);
  for (const auto& s : subs) {
    list_hash = hash_combine(list_hash, fnv1a64(s.id));
    reps.push_back(s.represented());
    load += reps.back().size();
  }
  const double p_empty = empty_probability(load);
  const std::size_t vocab = vocabulary_size(prompt_size, load);

  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto& ev = events[e];
    Rng rng(hash_combine(hash_combine(cfg_.seed, fnv1a64(ev.id)), list_hash));
    if (vocab == 0 || rng.uniform() < p_empty) continue;

    std::vector<std::size_t> correct;
    std::vector<std::size_t> wrong;
    for (std::size_t i = 0; i < vocab; ++i) {
      const bool hit = std::any_of(reps[i].begin(), reps[i].end(),
                                   [&](const SubscriptionId& id) { return ev.ground_truth.count(id) != 0; });
      (hit ? correct : wrong).push_back(i);
    }

    std::vector<SubscriptionId> picked;
    for (auto i : correct) picked.push_back(subs[i].id);
    if (cfg_.flip_noise > 0.0 && rng.uniform() < cfg_.flip_noise && !picked.empty()) {
      const auto slot = rng.below(picked.size());
      if (wrong.empty()) {
        picked.erase(picked.begin() + static_cast<std::ptrdiff_t>(slot));
      } else {
        picked[slot] = subs[wrong[rng.below(wrong.size())]].id;
      }
    }
    if (cfg_.hallucination_rate > 0.0 && rng.uniform() < cfg_.hallucination_rate) {
      picked.push_back(subs[rng.below(vocab)].id + "#h");
    }
    if (static_cast<std::int64_t>(picked.size()) > kappa) picked.resize(static_cast<std::size_t>(kappa));
    for (auto& id : picked) out.payload.matches.emplace_back(e + 1, std::move(id));
  }

  out.usage.prompt_tokens = budget.prompt_tokens(static_cast<std::int64_t>(prompt_size),
                                                 static_cast<std::int64_t>(events.size()));
  out.usage.response_tokens = cost::estimate_tokens(to_json(out.payload));
  out.usage.latency_s = cfg_.latency_base + cfg_.latency_per_token * static_cast<double>(out.usage.prompt_tokens);
  out.usage.calls = 1;
  return out;
}

}  // namespace semroute
