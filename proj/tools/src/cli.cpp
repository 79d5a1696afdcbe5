#include "semroute_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "semroute/backend.hpp"
#include "semroute/costmodel.hpp"
#include "semroute/csv.hpp"
#include "semroute/errors.hpp"
#include "semroute/harness.hpp"
#include "semroute/qoe.hpp"
#include "semroute/router.hpp"

namespace semroute::cli {

namespace fs = std::filesystem;

namespace {

// Thrown for problems a user fixes by changing flags.
struct UsageError : Error {
  using Error::Error;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("no seeds given");
  return out;
}

std::ofstream open_out(const fs::path& dir, const std::string& file) {
  fs::create_directories(dir);
  std::ofstream f(dir / file);
  if (!f) throw UsageError("cannot write " + (dir / file).string());
  return f;
}

struct Overrides {
  std::optional<std::size_t> k;
  std::optional<double> tau;
  std::optional<std::int64_t> kappa;
  std::optional<std::int64_t> window;
  std::optional<std::size_t> parallel;
  bool truncate = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--k", o.k, "Subscription clusters (default 19)");
  cmd->add_option("--tau", o.tau, "Prefilter cosine threshold (default 0.3)");
  cmd->add_option("--kappa", o.kappa, "Max matches per event (default 3)");
  cmd->add_option("--window", o.window, "Context window W in tokens (default 4096)");
  cmd->add_option("--parallel", o.parallel, "Concurrent backend calls P (default 1)");
  cmd->add_flag("--truncate", o.truncate, "Drop trailing subscriptions that do not fit the window");
}

PipelineConfig configure(const std::string& preset_name, const Overrides& o) {
  auto cfg = harness::preset(preset_name);
  if (o.k) cfg.k = *o.k;
  if (o.tau) cfg.tau = *o.tau;
  if (o.kappa) cfg.kappa = *o.kappa;
  if (o.window) cfg.budget.window = *o.window;
  if (o.parallel) cfg.parallel = *o.parallel;
  cfg.truncate_to_fit = o.truncate;
  cfg.validate();
  return cfg;
}

std::vector<std::shared_ptr<const MatchBackend>> make_backends(const std::vector<std::string>& specs) {
  std::vector<std::shared_ptr<const MatchBackend>> out;
  std::set<std::string> seen;
  for (const auto& s : specs) {
    auto b = make_backend(s);
    if (!seen.insert(b->name()).second) throw UsageError("backend '" + b->name() + "' given twice");
    out.push_back(std::move(b));
  }
  return out;
}

// ---- match ---------------------------------------------------------------

struct MatchArgs {
  std::string dataset;
  std::vector<std::string> presets{"A0"};
  std::vector<std::string> backends{"sim:oracle"};
  std::string seeds = "42,123,456,789,1024";
  double fraction = 0.1;
  std::string weights = "balanced";
  std::string out = ".";
  Overrides o;
};

int cmd_match(const MatchArgs& a, std::ostream& out, std::ostream& err) {
  const auto ds = harness::load_dataset(a.dataset);
  const auto backends = make_backends(a.backends);
  const auto seeds = parse_seeds(a.seeds);

  std::vector<harness::ExperimentResult> results;
  for (const auto& p : a.presets) {
    harness::ExperimentSpec spec;
    spec.config = configure(p, a.o);
    spec.dataset = ds;
    spec.backends = backends;
    spec.seeds = seeds;
    spec.calibration_fraction = a.fraction;
    spec.weights = qoe::Weights::preset(a.weights);
    results.push_back(harness::run_experiment(spec));
  }

  const fs::path dir(a.out);
  {
    auto f = open_out(dir, "results.csv");
    harness::write_results_csv(f, results);
  }
  {
    auto f = open_out(dir, "cells.csv");
    harness::write_cells_csv(f, results);
  }
  {
    auto f = open_out(dir, "decisions.jsonl");
    harness::write_decisions_jsonl(f, results);
  }
  harness::write_results_csv(out, results);

  std::size_t failed = 0;
  for (const auto& r : results) {
    for (const auto& s : r.seeds) {
      if (!s.failed) continue;
      ++failed;
      err << "preset " << r.preset << " seed " << s.seed << " failed: " << s.error << '\n';
    }
  }
  return failed ? kFailure : kOk;
}

// ---- cost ----------------------------------------------------------------

struct CostArgs {
  TokenBudget budget{.window = 4096, .t_inst = 200, .t_s = 80, .t_e = 50, .t_resp = 500};
  std::int64_t clusters = 10;
  std::int64_t subs = 25;  // per cluster, before compression
  std::int64_t events = 6000;
  std::vector<double> rho{1.0};
  std::int64_t parallel = 1;
  double t_llm = 1.0;
  bool w_cross = false;
  std::int64_t k = 0;
  std::string validate;
};

int cmd_cost(const CostArgs& a, std::ostream& out) {
  a.budget.validate();
  if (!a.validate.empty()) {
    std::ifstream in(a.validate);
    if (!in) throw UsageError("cannot open " + a.validate);
    // Logs without an I_pred column get predictions from m_c and b_max.
    cost::write_summary_csv(out, cost::validate_predictions(cost::read_cells_csv(in)));
    return kOk;
  }
  if (a.w_cross) {
    const auto total = a.clusters * a.subs;
    out << "n_subs,rho,k,w_cross\n";
    for (double r : a.rho) {
      out << total << ',' << csv::number(r) << ',' << a.k << ','
          << csv::number(cost::w_cross(a.budget, total, r, a.k)) << '\n';
    }
    return kOk;
  }
  if (a.clusters < 1) throw InvalidInput("--clusters must be >= 1");
  if (a.events < 0) throw InvalidInput("--events must be >= 0");
  out << "rho,n_subs,b_max,delta_b,m_c,I_c,I,R,L\n";
  for (double r : a.rho) {
    if (!(r > 0.0 && r <= 1.0)) throw InvalidInput("rho must lie in (0, 1]");
    const auto n = static_cast<std::int64_t>(std::llround(static_cast<double>(a.subs) * r));
    std::vector<cost::ClusterLoad> loads;
    // Events split as evenly as possible; the first clusters take the remainder.
    for (std::int64_t c = 0; c < a.clusters; ++c) {
      loads.push_back({n, a.events / a.clusters + (c < a.events % a.clusters ? 1 : 0)});
    }
    const auto p = cost::predict(a.budget, loads, a.parallel, a.t_llm);
    out << csv::number(r) << ',' << n << ',' << p.b_max.front() << ','
        << cost::delta_b(a.budget, a.subs, r) << ',' << loads.front().m_c << ',' << p.I_c.front() << ','
        << p.I << ',' << p.R << ',' << csv::number(p.L) << '\n';
  }
  return kOk;
}

// ---- calibrate -----------------------------------------------------------

struct CalibrateArgs {
  std::string dataset;
  std::vector<std::string> backends{"sim:oracle"};
  std::string strategy = "qoe";
  std::string weights = "balanced";
  std::string preset = "A3";
  double fraction = 0.1;
  std::uint64_t seed = 42;
  std::string out;
  Overrides o;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  const auto ds = harness::load_dataset(a.dataset);
  const auto backends = make_backends(a.backends);
  auto cfg = configure(a.preset, a.o);
  cfg.seed = a.seed;
  const auto weights = qoe::Weights::preset(a.weights);
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw InvalidInput("--fraction must lie in (0, 1]");

  // Calibration runs on the uncompressed partition; no backend is called
  // while building it.
  auto raw = cfg;
  raw.compression_enabled = false;
  raw.reunite = false;
  const HashedTfEmbedder embedder;
  auto clusters = optimize_subscriptions(ds.subscriptions, embedder, raw, homogeneous(backends.front()));
  std::vector<std::size_t> ids;
  for (const auto& c : clusters) ids.push_back(c.id);

  std::map<std::size_t, std::string> assignment;
  std::vector<qoe::CalibrationRecord> records;
  bool disjoint = a.fraction < 1.0;
  if (a.strategy == "homogeneous") {
    assignment = qoe::assign(qoe::Homogeneous{backends.front()->name()}, ids, {});
  } else if (a.strategy == "round_robin") {
    std::vector<std::string> names;
    for (const auto& b : backends) names.push_back(b->name());
    assignment = qoe::assign(qoe::RoundRobin{names}, ids, {});
  } else if (a.strategy == "qoe") {
    std::map<std::size_t, std::vector<Event>> per_cluster;
    for (const auto& e : ds.events) {
      const auto v = embedder.embed(e.text);
      std::size_t best = 0;
      double best_sim = -2.0;
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        const double s = cosine(v, clusters[c].centroid);
        if (s > best_sim) {
          best_sim = s;
          best = c;
        }
      }
      per_cluster[clusters[best].id].push_back(e);
    }
    const auto split = qoe::split_calibration(per_cluster, a.fraction, a.seed);
    disjoint = split.disjoint;
    records = qoe::calibrate(clusters, backends, split, embedder, raw);
    for (const auto& [c, name] : qoe::filter_disagreements(records)) {
      err << "note: " << name << " scores F1 = 0 on cluster " << c
          << " but above 0 elsewhere; dropped for that cluster only\n";
    }
    std::vector<std::size_t> calibrated;
    for (auto id : ids) {
      if (std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.cluster_id == id; })) {
        calibrated.push_back(id);
      }
    }
    assignment = qoe::assign(qoe::QoeOptimised{weights}, calibrated, records);
  } else {
    throw UsageError("unknown strategy '" + a.strategy + "' (homogeneous, round_robin, qoe)");
  }

  std::ostringstream table;
  table << "cluster,backend,strategy,weights,fraction,disjoint\n";
  for (const auto& [c, name] : assignment) {
    table << c << ',' << csv::escape(name) << ',' << a.strategy << ',' << a.weights << ','
          << csv::number(a.fraction) << ',' << (disjoint ? "true" : "false") << '\n';
  }
  out << table.str();
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    auto f = open_out(dir, "assignment.csv");
    f << table.str();
    if (!records.empty()) {
      auto r = open_out(dir, "calibration.csv");
      qoe::write_records_csv(r, records);
    }
  }
  return kOk;
}

// ---- invariants ----------------------------------------------------------

int cmd_invariants(const std::vector<std::string>& fixtures, std::ostream& out) {
  bool ok = true;
  for (const auto& name : fixtures) {
    const auto report = harness::check_invariants(harness::build_fixture(name));
    for (const auto& c : report.checks) {
      out << name << ' ' << c.name << ' ' << (c.passed ? "PASS" : "FAIL") << ' ' << c.detail << '\n';
    }
    if (!report.passed()) {
      ok = false;
      std::string names;
      for (const auto& n : report.failed_names()) names += (names.empty() ? "" : ",") + n;
      out << name << " FAILED " << names << '\n';
    }
  }
  return ok ? kOk : kFailure;
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
  harness::SyntheticSpec spec;
  std::size_t duplicate_to = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  auto ds = harness::generate_synthetic(a.spec);
  if (a.duplicate_to > 0) {
    ds.subscriptions = harness::generate_duplication_sweep({.base = ds.subscriptions, .target_sizes = {a.duplicate_to}})
                           .front();
  }
  if (a.out.empty()) {
    harness::write_dataset(out, ds);
  } else {
    std::ofstream f(a.out);
    if (!f) throw UsageError("cannot write " + a.out);
    harness::write_dataset(f, ds);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic pub/sub matching: cost model, simulation and evaluation", "semroute"};
  app.require_subcommand(1);

  MatchArgs m;
  auto* match = app.add_subcommand("match", "Optimise subscriptions, match events, write result CSVs");
  match->add_option("--dataset", m.dataset, "Dataset JSONL")->required();
  match->add_option("--preset", m.presets, "Ablation preset A0..A6 (repeatable)");
  match->add_option("--backend", m.backends, "Backend spec (repeatable)");
  match->add_option("--seeds", m.seeds, "Comma-separated k-means seeds");
  match->add_option("--fraction", m.fraction, "Calibration fraction with several backends");
  match->add_option("--weights", m.weights, "accuracy_first | balanced | cost_first");
  match->add_option("--out", m.out, "Output directory");
  add_overrides(match, m.o);

  CostArgs c;
  auto* costc = app.add_subcommand("cost", "Evaluate the analytic cost model");
  costc->add_option("--window", c.budget.window);
  costc->add_option("--t-inst", c.budget.t_inst);
  costc->add_option("--t-s", c.budget.t_s);
  costc->add_option("--t-e", c.budget.t_e);
  costc->add_option("--t-resp", c.budget.t_resp);
  costc->add_option("--clusters", c.clusters, "Number of clusters");
  costc->add_option("--subs", c.subs, "Subscriptions per cluster before compression");
  costc->add_option("--events", c.events, "Total events m");
  costc->add_option("--rho", c.rho, "Compression ratio (repeatable)");
  costc->add_option("--parallel", c.parallel);
  costc->add_option("--t-llm", c.t_llm, "Mean seconds per invocation");
  costc->add_flag("--w-cross", c.w_cross, "Print the crossover window instead");
  costc->add_option("--k", c.k, "Clusters for --w-cross");
  costc->add_option("--validate", c.validate, "cells.csv from a previous run");

  CalibrateArgs cal;
  auto* calc = app.add_subcommand("calibrate", "Assign a backend to every cluster");
  calc->add_option("--dataset", cal.dataset, "Dataset JSONL")->required();
  calc->add_option("--backend", cal.backends, "Backend spec (repeatable)");
  calc->add_option("--strategy", cal.strategy, "homogeneous | round_robin | qoe");
  calc->add_option("--weights", cal.weights, "accuracy_first | balanced | cost_first");
  calc->add_option("--preset", cal.preset, "Preset that defines the clustering");
  calc->add_option("--fraction", cal.fraction, "Calibration fraction per cluster");
  calc->add_option("--seed", cal.seed);
  calc->add_option("--out", cal.out, "Output directory");
  add_overrides(calc, cal.o);

  std::vector<std::string> fixtures{"oracle", "collapse"};
  auto* inv = app.add_subcommand("invariants", "Run the I1-I5 regression invariants");
  inv->add_option("--fixture", fixtures, "oracle | collapse | broken-I1..broken-I5 (repeatable)");

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  gen->add_option("--subs", g.spec.n_subscriptions);
  gen->add_option("--events", g.spec.n_events);
  gen->add_option("--pairs", g.spec.near_duplicate_pairs, "Near-duplicate subscription pairs");
  gen->add_option("--seed", g.spec.seed);
  gen->add_option("--duplicate-to", g.duplicate_to, "Grow the subscription set by duplication-with-rename");
  gen->add_option("--out", g.out, "Output file (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*match) return cmd_match(m, out, err);
    if (*costc) {
      // Buffered so a failing row leaves no half-written table.
      std::ostringstream buf;
      const int rc = cmd_cost(c, buf);
      out << buf.str();
      return rc;
    }
    if (*calc) return cmd_calibrate(cal, out, err);
    if (*inv) return cmd_invariants(fixtures, out);
    if (*gen) return cmd_generate(g, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DatasetInvalid& e) {
    err << "error: invalid dataset: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace semroute::cli
