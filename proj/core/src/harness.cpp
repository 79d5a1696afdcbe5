#include "semroute/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "semroute/csv.hpp"
#include "semroute/errors.hpp"
#include "semroute/rng.hpp"

namespace semroute::harness {

using nlohmann::json;

// ---- dataset I/O ---------------------------------------------------------

namespace {

std::string require_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw ParseError(std::string("missing string field '") + key + "'", line);
  return it->get<std::string>();
}

std::vector<std::string> require_strings(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw ParseError(std::string("missing array field '") + key + "'", line);
  std::vector<std::string> out;
  for (const auto& x : *it) {
    if (!x.is_string()) throw ParseError(std::string("field '") + key + "' must hold strings", line);
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

Dataset parse_dataset(std::istream& in) {
  std::vector<Subscription> subs;
  std::vector<Event> events;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line);
    const auto type = require_string(j, "type", line);
    if (type == "subscription") {
      Subscription s;
      s.id = require_string(j, "id", line);
      s.description = require_string(j, "description", line);
      for (auto& u : require_strings(j, "subscribers", line)) s.subscribers.insert(std::move(u));
      subs.push_back(std::move(s));
    } else if (type == "event") {
      Event e;
      e.id = require_string(j, "id", line);
      e.text = require_string(j, "text", line);
      for (auto& g : require_strings(j, "ground_truth", line)) e.ground_truth.insert(std::move(g));
      events.push_back(std::move(e));
    } else {
      throw ParseError("unknown line type '" + type + "'", line);
    }
  }
  const auto report = validate_dataset(subs, events);
  if (!report.ok()) throw DatasetInvalid(report.summary());
  return {SubscriptionSet(std::move(subs)), std::move(events)};
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  for (const auto& s : ds.subscriptions) {
    json j{{"type", "subscription"}, {"id", s.id}, {"description", s.description}, {"subscribers", s.subscribers}};
    out << j.dump() << '\n';
  }
  for (const auto& e : ds.events) {
    json j{{"type", "event"}, {"id", e.id}, {"text", e.text}, {"ground_truth", e.ground_truth}};
    out << j.dump() << '\n';
  }
}

// ---- generators ----------------------------------------------------------

namespace {

std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
  std::string w;
  const auto syllables = 3 + rng.below(2);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
  }
  return w;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

struct Topic {
  std::vector<std::string> ids;  // one, or two for a near-duplicate pair
  std::vector<std::string> words;
};

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_subscriptions == 0) throw InvalidInput("synthetic data needs at least one subscription");
  if (spec.words_per_topic == 0 || spec.max_truth == 0) throw InvalidInput("words_per_topic and max_truth must be >= 1");
  if (2 * spec.near_duplicate_pairs > spec.n_subscriptions) throw InvalidInput("too many near-duplicate pairs");
  if (spec.near_duplicate_pairs > 0 && spec.max_truth < 2) throw InvalidInput("pairs need max_truth >= 2");

  Rng rng(spec.seed);
  std::set<std::string> used{"notify", "me", "about", "report", "variant"};
  auto fresh_word = [&] {
    for (;;) {
      auto w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };

  // 24 shared words plus one distinguishing word keeps a pair's cosine
  // around 0.96 under bag-of-words embeddings.
  constexpr std::size_t kPairWords = 24;
  const std::size_t n_topics = spec.n_subscriptions - spec.near_duplicate_pairs;
  std::vector<Topic> topics(n_topics);
  std::vector<Subscription> subs;
  std::size_t next_id = 1;
  for (std::size_t t = 0; t < n_topics; ++t) {
    auto& topic = topics[t];
    const bool pair = t < spec.near_duplicate_pairs;
    const std::size_t n_words = pair ? kPairWords : spec.words_per_topic;
    for (std::size_t w = 0; w < n_words; ++w) topic.words.push_back(fresh_word());
    for (int m = 0; m < (pair ? 2 : 1); ++m) {
      const auto id = "s" + std::to_string(next_id++);
      auto desc = "notify me about " + join(topic.words);
      if (pair) desc += " " + fresh_word();
      subs.push_back(make_subscription(id, desc, {"u" + id.substr(1)}));
      topic.ids.push_back(id);
    }
  }

  std::vector<Event> events;
  for (std::size_t i = 0; i < spec.n_events; ++i) {
    std::vector<std::size_t> chosen;
    std::size_t atoms = 0;
    auto try_add = [&](std::size_t t) {
      if (std::find(chosen.begin(), chosen.end(), t) != chosen.end()) return;
      if (atoms + topics[t].ids.size() > spec.max_truth) return;
      chosen.push_back(t);
      atoms += topics[t].ids.size();
    };
    if (i < n_topics) try_add(i);
    const auto want = 1 + rng.below(spec.max_truth);
    for (std::size_t attempt = 0; chosen.size() < want && attempt < 4 * spec.max_truth; ++attempt) {
      try_add(rng.below(n_topics));
    }

    Event e;
    e.id = "e" + std::to_string(i + 1);
    std::vector<std::string> words{"report"};
    for (auto t : chosen) {
      auto pool = topics[t].words;
      rng.shuffle(pool);
      const std::size_t take = std::min<std::size_t>(4, pool.size());
      words.insert(words.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
      e.ground_truth.insert(topics[t].ids.begin(), topics[t].ids.end());
    }
    e.text = join(words);
    events.push_back(std::move(e));
  }
  return {SubscriptionSet(std::move(subs)), std::move(events)};
}

std::vector<SubscriptionSet> generate_duplication_sweep(const SweepSpec& spec) {
  if (spec.base.empty()) throw InvalidInput("duplication sweep needs a non-empty base");
  const auto& base = spec.base.subscriptions();
  std::vector<SubscriptionSet> out;
  for (auto target : spec.target_sizes) {
    if (target < base.size()) {
      throw InvalidInput("sweep target " + std::to_string(target) + " is below the base size " +
                         std::to_string(base.size()));
    }
    std::vector<Subscription> subs(base.begin(), base.end());
    std::vector<std::size_t> copies(base.size(), 0);
    for (std::size_t i = 0; subs.size() < target; i = (i + 1) % base.size()) {
      const auto& src = base[i];
      const auto id = src.id + spec.rename_suffix + std::to_string(++copies[i]);
      subs.push_back(make_subscription(id, src.description, {"u_" + id}));
    }
    out.emplace_back(std::move(subs));
  }
  return out;
}

Dataset subsample(const Dataset& ds, std::size_t n) {
  const auto& all = ds.subscriptions.subscriptions();
  n = std::min(n, all.size());
  std::vector<Subscription> kept(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  std::set<SubscriptionId> ids;
  for (const auto& s : kept) ids.insert(s.id);
  Dataset out{SubscriptionSet(std::move(kept)), ds.events};
  for (auto& e : out.events) {
    std::erase_if(e.ground_truth, [&](const SubscriptionId& g) { return !ids.count(g); });
  }
  return out;
}

// ---- presets -------------------------------------------------------------

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"A0", "A1", "A2", "A3", "A4", "A5", "A6"};
  return names;
}

PipelineConfig preset(std::string_view name) {
  PipelineConfig c;
  c.preset = std::string(name);
  if (name == "A0") {
  } else if (name == "A1") {
    c.clustering_enabled = c.prefilter_enabled = true;
  } else if (name == "A2") {
    c.compression_enabled = true;
  } else if (name == "A3") {
    c.clustering_enabled = c.compression_enabled = c.prefilter_enabled = true;
  } else if (name == "A4") {
    c.clustering_enabled = c.compression_enabled = c.reunite = true;
  } else if (name == "A5") {
    c.clustering_enabled = c.compression_enabled = c.prefilter_enabled = true;
    c.event_clusters = 5;
  } else if (name == "A6") {
    c.clustering_enabled = c.compression_enabled = true;
  } else {
    throw InvalidInput("unknown preset '" + std::string(name) + "' (expected A0..A6)");
  }
  return c;
}

// ---- experiments ---------------------------------------------------------

std::size_t ExperimentResult::failures() const {
  return static_cast<std::size_t>(std::count_if(seeds.begin(), seeds.end(), [](const auto& s) { return s.failed; }));
}

std::vector<cost::ValidationCell> invocation_cells(const MatchRun& run, const PipelineConfig& cfg) {
  std::map<std::size_t, std::int64_t> measured;
  for (const auto& b : run.batches) ++measured[b.cluster];
  std::vector<cost::ValidationCell> cells;
  for (const auto& c : run.clusters) {
    cost::ValidationCell cell;
    cell.config = cfg.preset;
    cell.k = cfg.clustering_enabled ? static_cast<std::int64_t>(cfg.k) : 1;
    cell.cluster = static_cast<std::int64_t>(c.cluster);
    cell.m_c = c.m_c;
    cell.b_max = cost::batch_capacity(cfg.budget, c.n_subs);
    cell.I_pred = cost::invocations(c.m_c, cell.b_max);
    cell.I_meas = measured[c.cluster];
    cells.push_back(cell);
  }
  return cells;
}

namespace {

std::size_t nearest_cluster(const Vector& v, const std::vector<ClusterState>& clusters) {
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const double sim = cosine(v, clusters[c].centroid);
    if (sim > best_sim) {
      best_sim = sim;
      best = c;
    }
  }
  return best;
}

SeedResult run_seed(const ExperimentSpec& spec, std::uint64_t seed, const EmbeddingProvider& provider) {
  SeedResult r;
  r.seed = seed;
  PipelineConfig cfg = spec.config;
  cfg.seed = seed;
  const auto& ds = spec.dataset;
  std::vector<Event> evaluated = ds.events;

  BackendAssignment assignment;
  if (spec.backends.empty()) throw InvalidInput("no backend given");
  if (spec.backends.size() == 1) {
    assignment = homogeneous(spec.backends.front());
  } else {
    // Calibrate on the uncompressed clusters: the compressed form depends
    // on which backend runs the compression.
    PipelineConfig raw = cfg;
    raw.compression_enabled = false;
    raw.reunite = false;
    auto plain = optimize_subscriptions(ds.subscriptions, provider, raw, homogeneous(spec.backends.front()));
    std::map<std::size_t, std::vector<Event>> per_cluster;
    for (const auto& e : ds.events) per_cluster[nearest_cluster(provider.embed(e.text), plain)].push_back(e);
    const auto split = qoe::split_calibration(per_cluster, spec.calibration_fraction, seed);
    r.calibration = qoe::calibrate(plain, spec.backends, split, provider, raw);

    std::vector<std::size_t> ids;
    for (const auto& c : plain) ids.push_back(c.id);
    std::vector<std::size_t> calibrated;
    for (auto id : ids) {
      if (std::any_of(r.calibration.begin(), r.calibration.end(),
                      [&](const auto& rec) { return rec.cluster_id == id; })) {
        calibrated.push_back(id);
      }
    }
    r.assignment = qoe::assign(qoe::QoeOptimised{spec.weights}, calibrated, r.calibration);

    std::map<std::string, std::shared_ptr<const MatchBackend>> by_name;
    for (const auto& b : spec.backends) by_name.emplace(b->name(), b);
    auto chosen = r.assignment;
    assignment = [chosen, by_name, fallback = spec.backends.front()](std::size_t c) {
      auto it = chosen.find(c);
      return it == chosen.end() ? fallback : by_name.at(it->second);
    };

    if (split.disjoint) {
      std::set<std::string> cal_ids;
      for (const auto& [c, cs] : split.clusters) {
        for (const auto& e : cs.cal) cal_ids.insert(e.id);
      }
      std::erase_if(evaluated, [&](const Event& e) { return cal_ids.count(e.id) != 0; });
    }
  }

  auto clusters = optimize_subscriptions(ds.subscriptions, provider, cfg, assignment);
  r.rho = overall_rho(clusters);
  for (const auto& c : clusters) r.merges_applied += c.merges_applied;
  if (evaluated.empty()) throw InvalidInput("no events left to evaluate");

  const auto run = match_events(evaluated, clusters, provider, cfg);
  const auto& d = ds.subscriptions.descriptions();
  std::vector<metrics::EventScore> ids, descs;
  double fpr_id = 0.0, fpr_desc = 0.0;
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    const auto& pred = run.decisions[i];
    const auto& truth = evaluated[i].ground_truth;
    ids.push_back(metrics::score_event_id(pred, truth));
    descs.push_back(metrics::score_event_desc(pred, truth, d, metrics::UnknownIds::Distinct));
    fpr_id += metrics::false_positive_rate(pred, truth, ds.subscriptions.size());
    fpr_desc += metrics::false_positive_rate_desc(pred, truth, d, metrics::UnknownIds::Distinct);
  }
  const double n = static_cast<double>(evaluated.size());
  r.id_score = metrics::macro_average(ids);
  r.desc_score = metrics::macro_average(descs);
  r.fpr_id = fpr_id / n;
  r.fpr_desc = fpr_desc / n;
  r.usage = run.usage;
  r.n_events = evaluated.size();
  r.empty_prediction_rate = run.empty_prediction_rate();
  r.cost_per_event = run.usage.cost / n;
  r.cells = invocation_cells(run, cfg);
  r.decisions = run.decisions;
  if (spec.backends.size() == 1) {
    for (const auto& c : clusters) r.assignment[c.id] = c.backend_name;
  }
  return r;
}

SeedResult run_seed_guarded(const ExperimentSpec& spec, std::uint64_t seed, const EmbeddingProvider& provider) {
  try {
    return run_seed(spec, seed, provider);
  } catch (const Error& e) {
    SeedResult r;
    r.seed = seed;
    r.failed = true;
    r.error = e.what();
    return r;
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.config.validate();
  if (spec.seeds.empty()) throw InvalidInput("no seeds given");
  if (spec.backends.empty()) throw InvalidInput("no backend given");
  static const HashedTfEmbedder kDefault;
  const EmbeddingProvider& provider = spec.embedder ? *spec.embedder : kDefault;

  ExperimentResult out;
  out.preset = spec.config.preset;
  if (spec.concurrent_seeds && spec.seeds.size() > 1) {
    std::vector<std::future<SeedResult>> futures;
    for (auto seed : spec.seeds) {
      futures.push_back(std::async(std::launch::async, [&spec, seed, &provider] {
        return run_seed_guarded(spec, seed, provider);
      }));
    }
    for (auto& f : futures) out.seeds.push_back(f.get());
  } else {
    for (auto seed : spec.seeds) out.seeds.push_back(run_seed_guarded(spec, seed, provider));
  }
  return out;
}

namespace {

struct Row {
  double precision, recall, f1, fpr, invocations, rho, latency_s, prompt_tokens, response_tokens, cost_per_event;
};

Row row_of(const SeedResult& s, metrics::Variant v) {
  const auto& sc = v == metrics::Variant::Id ? s.id_score : s.desc_score;
  return {sc.precision,
          sc.recall,
          sc.f1,
          v == metrics::Variant::Id ? s.fpr_id : s.fpr_desc,
          static_cast<double>(s.usage.invocations),
          s.rho,
          s.usage.latency_s,
          static_cast<double>(s.usage.prompt_tokens),
          static_cast<double>(s.usage.response_tokens),
          s.cost_per_event};
}

void write_row(std::ostream& out, const std::string& preset, const std::string& seed, std::string_view variant,
               const Row& r) {
  out << csv::escape(preset) << ',' << csv::escape(seed) << ',' << variant;
  for (double x : {r.precision, r.recall, r.f1, r.fpr, r.invocations, r.rho, r.latency_s, r.prompt_tokens,
                   r.response_tokens, r.cost_per_event}) {
    out << ',' << csv::number(x);
  }
  out << '\n';
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  out << "preset,seed,variant,precision,recall,f1,fpr,invocations,rho,latency_s,prompt_tokens,"
         "response_tokens,cost_per_event\n";
  for (const auto& res : results) {
    for (auto v : {metrics::Variant::Id, metrics::Variant::Description}) {
      std::vector<Row> rows;
      for (const auto& s : res.seeds) {
        if (s.failed) continue;
        rows.push_back(row_of(s, v));
        write_row(out, res.preset, std::to_string(s.seed), metrics::to_string(v), rows.back());
      }
      if (rows.empty()) continue;
      Row mean{}, half{};
      auto fields = [](Row& r) {
        return std::array<double*, 10>{&r.precision, &r.recall, &r.f1, &r.fpr, &r.invocations, &r.rho,
                                       &r.latency_s, &r.prompt_tokens, &r.response_tokens, &r.cost_per_event};
      };
      for (std::size_t f = 0; f < 10; ++f) {
        std::vector<double> values;
        for (auto& r : rows) values.push_back(*fields(r)[f]);
        const auto agg = metrics::aggregate_seeds(values);
        *fields(mean)[f] = agg.mean;
        *fields(half)[f] = agg.half_ci;
      }
      const auto n = "(n=" + std::to_string(rows.size()) + ")";
      write_row(out, res.preset, "mean" + n, metrics::to_string(v), mean);
      write_row(out, res.preset, "ci95" + n, metrics::to_string(v), half);
    }
    for (const auto& s : res.seeds) {
      if (!s.failed) continue;
      out << csv::escape(res.preset) << ',' << s.seed << ",failed,,,,,,,,,,\n";
    }
  }
}

void write_cells_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  std::vector<cost::ValidationCell> all;
  for (const auto& res : results) {
    for (const auto& s : res.seeds) all.insert(all.end(), s.cells.begin(), s.cells.end());
  }
  cost::write_cells_csv(out, all);
}

void write_decisions_jsonl(std::ostream& out, const std::vector<ExperimentResult>& results) {
  for (const auto& res : results) {
    for (const auto& s : res.seeds) {
      if (s.failed) {
        out << json{{"preset", res.preset}, {"seed", s.seed}, {"error", s.error}}.dump() << '\n';
        continue;
      }
      for (const auto& d : s.decisions) {
        out << json{{"preset", res.preset}, {"seed", s.seed}, {"event_id", d.event_id}, {"matched", d.matched}}.dump()
            << '\n';
      }
    }
  }
}

// ---- invariants ----------------------------------------------------------

bool InvariantReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> InvariantReport::failed_names() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name);
  }
  return out;
}

namespace {

std::vector<SweepPoint> sorted(std::vector<SweepPoint> pts) {
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.size < b.size; });
  return pts;
}

InvariantCheck check_i1(const InvariantArtifacts& a) {
  InvariantCheck c{"I1", true, ""};
  const auto pts = sorted(a.i1_f1);
  if (pts.empty()) return {"I1", false, "no sweep points"};
  std::optional<double> after;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool truncated = static_cast<std::int64_t>(pts[i].size) >= a.truncation_onset;
    if (truncated) {
      if (!after) after = pts[i].value;
      if (std::abs(pts[i].value - *after) > 1e-9) {
        return {"I1", false, "F1 changes after truncation onset at |S|=" + std::to_string(pts[i].size)};
      }
    } else if (i > 0 && pts[i].value < pts[i - 1].value - 1e-12) {
      return {"I1", false, "F1 decreases from |S|=" + std::to_string(pts[i - 1].size) + " to " +
                               std::to_string(pts[i].size)};
    }
  }
  c.detail = std::to_string(pts.size()) + " sizes, onset " + std::to_string(a.truncation_onset);
  return c;
}

InvariantCheck check_i2(const InvariantArtifacts& a) {
  const auto pts = sorted(a.i2_empty_rate);
  if (pts.empty()) return {"I2", false, "no sweep points"};
  std::string rates;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rates += (i ? " " : "") + csv::number(pts[i].value);
    if (i > 0 && pts[i].value < pts[i - 1].value - 1e-12) {
      return {"I2", false, "empty-prediction rate decreases from |S|=" + std::to_string(pts[i - 1].size) +
                               " to " + std::to_string(pts[i].size)};
    }
  }
  return {"I2", true, "rates " + rates};
}

InvariantCheck check_i3(const InvariantArtifacts& a) {
  if (a.i3_cells.empty()) return {"I3", false, "no cells"};
  const auto summary = cost::validate_predictions(a.i3_cells);
  const bool ok = summary.fraction_in_band >= 0.8;
  return {"I3", ok,
          csv::number(summary.fraction_in_band * 100.0) + "% of " + std::to_string(summary.cells) +
              " cells within the factor-of-two band"};
}

InvariantCheck check_i4(const InvariantArtifacts& a) {
  if (!a.i4_d.injective()) return {"I4", false, "description map is not injective"};
  if (a.i4_events.size() != a.i4_decisions.size()) return {"I4", false, "events and decisions differ in length"};
  for (std::size_t i = 0; i < a.i4_events.size(); ++i) {
    const auto id = metrics::score_event_id(a.i4_decisions[i], a.i4_events[i].ground_truth);
    const auto desc = metrics::score_event_desc(a.i4_decisions[i], a.i4_events[i].ground_truth, a.i4_d,
                                                metrics::UnknownIds::Distinct);
    if (std::abs(id.f1 - desc.f1) > 1e-12 || std::abs(id.precision - desc.precision) > 1e-12 ||
        std::abs(id.recall - desc.recall) > 1e-12) {
      return {"I4", false, "event " + a.i4_events[i].id + " scores differently under the two variants"};
    }
  }
  return {"I4", true, std::to_string(a.i4_events.size()) + " events agree"};
}

InvariantCheck check_i5(const InvariantArtifacts& a) {
  if (!a.i5_split.disjoint) return {"I5", true, "fraction 1.0: calibration and evaluation overlap by design"};
  const auto bad = qoe::overlaps(a.i5_split);
  if (!bad.empty()) {
    return {"I5", false, "cluster " + std::to_string(bad.begin()->first) + " shares " +
                             std::to_string(bad.begin()->second.size()) + " event(s) between splits"};
  }
  return {"I5", true, std::to_string(a.i5_split.clusters.size()) + " clusters disjoint"};
}

}  // namespace

InvariantReport check_invariants(const InvariantArtifacts& a) {
  return {{check_i1(a), check_i2(a), check_i3(a), check_i4(a), check_i5(a)}};
}

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"oracle",    "collapse",  "broken-I1", "broken-I2",
                                              "broken-I3", "broken-I4", "broken-I5"};
  return names;
}

namespace {

InvariantArtifacts build_clean(const std::string& name, std::shared_ptr<const MatchBackend> backend) {
  const HashedTfEmbedder embedder;
  InvariantArtifacts a;
  a.name = name;
  const auto base = generate_synthetic({.n_subscriptions = 19, .n_events = 200, .seed = 42});

  // I1: A0 over subsampled and duplicated sizes, truncating prompts.
  auto a0 = preset("A0");
  a0.truncate_to_fit = true;
  a.truncation_onset = cost::max_subscriptions_for_one_event(a0.budget) + 1;
  const auto sweep = generate_duplication_sweep({.base = base.subscriptions, .target_sizes = {19, 50, 200}});
  std::vector<Dataset> i1_sets{subsample(base, 5), subsample(base, 10)};
  for (const auto& s : sweep) i1_sets.push_back({s, base.events});
  for (const auto& ds : i1_sets) {
    auto clusters = optimize_subscriptions(ds.subscriptions, embedder, a0, homogeneous(backend));
    const auto run = match_events(ds.events, clusters, embedder, a0);
    std::vector<metrics::EventScore> scores;
    for (std::size_t i = 0; i < ds.events.size(); ++i) {
      scores.push_back(metrics::score_event_id(run.decisions[i], ds.events[i].ground_truth));
    }
    a.i1_f1.push_back({ds.subscriptions.size(), metrics::macro_average(scores).f1});
  }

  // I2: A4 empty-prediction rate over the duplication sweep.
  const auto a4 = preset("A4");
  for (const auto& s : generate_duplication_sweep({.base = base.subscriptions, .target_sizes = {50, 200, 2000}})) {
    auto clusters = optimize_subscriptions(s, embedder, a4, homogeneous(backend));
    const auto run = match_events(base.events, clusters, embedder, a4);
    a.i2_empty_rate.push_back({s.size(), run.empty_prediction_rate()});
  }

  // I3: predicted vs measured invocations, A0/A1/A3 over k.
  const auto big = generate_synthetic({.n_subscriptions = 19, .n_events = 1000, .seed = 7});
  for (const auto* p : {"A0", "A1", "A3"}) {
    for (std::size_t k : {1, 2, 5, 10, 19}) {
      auto cfg = preset(p);
      cfg.k = k;
      auto clusters = optimize_subscriptions(big.subscriptions, embedder, cfg, homogeneous(backend));
      const auto run = match_events(big.events, clusters, embedder, cfg);
      const auto cells = invocation_cells(run, cfg);
      a.i3_cells.insert(a.i3_cells.end(), cells.begin(), cells.end());
      if (std::string_view(p) == "A0") break;  // k has no effect without clustering
    }
  }

  // I4: injective d, A0 predictions.
  {
    auto clusters = optimize_subscriptions(base.subscriptions, embedder, a0, homogeneous(backend));
    const auto run = match_events(base.events, clusters, embedder, a0);
    a.i4_d = base.subscriptions.descriptions();
    a.i4_events = base.events;
    a.i4_decisions = run.decisions;
  }

  // I5: calibration split over A3 clusters.
  {
    const auto a3 = preset("A3");
    auto clusters = optimize_subscriptions(base.subscriptions, embedder, a3, homogeneous(backend));
    std::map<std::size_t, std::vector<Event>> per_cluster;
    for (const auto& e : base.events) per_cluster[nearest_cluster(embedder.embed(e.text), clusters)].push_back(e);
    a.i5_split = qoe::split_calibration(per_cluster, 0.1, 42);
  }
  return a;
}

}  // namespace

InvariantArtifacts build_fixture(std::string_view name) {
  const auto oracle = std::make_shared<SimulatedBackend>(SimulatedBackend::oracle_config());
  if (name == "oracle") return build_clean("oracle", oracle);
  if (name == "collapse") {
    return build_clean("collapse", std::make_shared<SimulatedBackend>(SimulatedBackend::collapse_config(150)));
  }

  auto a = build_clean(std::string(name), oracle);
  if (name == "broken-I1") {
    // A dip in F1 before truncation engages.
    auto& pts = a.i1_f1;
    std::sort(pts.begin(), pts.end(), [](const auto& x, const auto& y) { return x.size < y.size; });
    pts[1].value = pts[0].value - 0.1;
  } else if (name == "broken-I2") {
    a.i2_empty_rate = {{50, 0.3}, {200, 0.2}, {2000, 0.9}};
  } else if (name == "broken-I3") {
    for (auto& c : a.i3_cells) c.I_meas = c.I_pred * 3;
  } else if (name == "broken-I4") {
    // Duplicated set: d is no longer injective.
    const auto base = generate_synthetic({.n_subscriptions = 19, .n_events = 200, .seed = 42});
    const auto dup = generate_duplication_sweep({.base = base.subscriptions, .target_sizes = {50}}).front();
    a.i4_d = dup.descriptions();
  } else if (name == "broken-I5") {
    auto split = a.i5_split;
    // Re-split at 0.5 and leak one evaluation event into calibration.
    std::map<std::size_t, std::vector<Event>> per_cluster;
    for (const auto& [c, cs] : split.clusters) {
      auto& v = per_cluster[c];
      v.insert(v.end(), cs.cal.begin(), cs.cal.end());
      v.insert(v.end(), cs.eval.begin(), cs.eval.end());
    }
    a.i5_split = qoe::split_calibration(per_cluster, 0.5, 42);
    for (auto& [c, cs] : a.i5_split.clusters) {
      if (!cs.eval.empty()) {
        cs.cal.push_back(cs.eval.front());
        break;
      }
    }
  } else {
    throw InvalidInput("unknown fixture '" + std::string(name) + "'");
  }
  return a;
}

}  // namespace semroute::harness
