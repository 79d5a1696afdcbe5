#include "semroute/backend.hpp"

#include <map>
#include <set>

#include <json.hpp>

#include "semroute/errors.hpp"

namespace semroute {

using nlohmann::json;

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw BackendProtocolError(std::string("response is not JSON: ") + e.what());
  }
}

std::vector<IndexPair> parse_pairs(const json& arr, std::string_view key, std::size_t n) {
  if (!arr.is_array()) throw BackendProtocolError("\"" + std::string(key) + "\" is not a list");
  std::vector<IndexPair> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
      throw BackendProtocolError("\"" + std::string(key) + "\" entry is not an [i, j] pair");
    }
    const auto i = p[0].get<std::int64_t>();
    const auto j = p[1].get<std::int64_t>();
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > n || static_cast<std::size_t>(j) > n) {
      throw BackendProtocolError("index pair [" + std::to_string(i) + ", " + std::to_string(j) +
                                 "] outside 1.." + std::to_string(n));
    }
    if (i == j) throw BackendProtocolError("index pair relates subscription " + std::to_string(i) + " to itself");
    out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace

CoverMergeDecision parse_cover_merge_response(std::string_view json_text, std::size_t n_subs) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw BackendProtocolError("cover/merge response is not a JSON object");
  CoverMergeDecision d;
  if (doc.contains("covers")) d.covers = parse_pairs(doc["covers"], "covers", n_subs);
  if (doc.contains("merges")) d.merges = parse_pairs(doc["merges"], "merges", n_subs);
  std::set<IndexPair> covers(d.covers.begin(), d.covers.end());
  for (const auto& m : d.merges) {
    if (covers.count(m)) {
      throw BackendProtocolError("pair [" + std::to_string(m.first) + ", " + std::to_string(m.second) +
                                 "] is both a cover and a merge");
    }
  }
  return d;
}

MatchResponse parse_match_response(std::string_view json_text, std::size_t batch_size,
                                   std::int64_t kappa) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw BackendProtocolError("match response is not a JSON object");
  MatchResponse r;
  if (!doc.contains("matches")) return r;
  const auto& arr = doc["matches"];
  if (!arr.is_array()) throw BackendProtocolError("\"matches\" is not a list");
  std::map<std::size_t, std::int64_t> per_event;
  for (const auto& m : arr) {
    if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer()) {
      throw BackendProtocolError("\"matches\" entry is not an [event_idx, sub_id] pair");
    }
    const auto idx = m[0].get<std::int64_t>();
    if (idx < 1 || static_cast<std::size_t>(idx) > batch_size) {
      throw BackendProtocolError("event index " + std::to_string(idx) + " outside 1.." +
                                 std::to_string(batch_size));
    }
    std::string id;
    if (m[1].is_string()) {
      id = m[1].get<std::string>();
    } else if (m[1].is_number_integer()) {
      id = std::to_string(m[1].get<std::int64_t>());
    } else {
      throw BackendProtocolError("sub_id is neither a string nor an integer");
    }
    auto& count = per_event[static_cast<std::size_t>(idx)];
    if (count >= kappa) continue;
    ++count;
    r.matches.emplace_back(static_cast<std::size_t>(idx), std::move(id));
  }
  return r;
}

std::string to_json(const CoverMergeDecision& d) {
  if (d.empty()) return "{}";
  json doc;
  doc["covers"] = json::array();
  doc["merges"] = json::array();
  for (const auto& [i, j] : d.covers) doc["covers"].push_back({i, j});
  for (const auto& [i, j] : d.merges) doc["merges"].push_back({i, j});
  return doc.dump();
}

std::string to_json(const MatchResponse& r) {
  json doc;
  doc["matches"] = json::array();
  for (const auto& [idx, id] : r.matches) doc["matches"].push_back({idx, id});
  return doc.dump();
}

namespace {

std::map<std::string, std::string> parse_options(std::string_view rest) {
  std::map<std::string, std::string> opts;
  std::size_t start = 0;
  while (start < rest.size()) {
    auto end = rest.find(',', start);
    if (end == std::string_view::npos) end = rest.size();
    auto item = rest.substr(start, end - start);
    if (!item.empty()) {
      auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        opts[std::string(item)] = "";
      } else {
        opts[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
      }
    }
    start = end + 1;
  }
  return opts;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error&) {
    throw InvalidInput("backend option " + key + "=" + v + " is not a number");
  }
}

}  // namespace

std::shared_ptr<MatchBackend> make_backend(std::string_view spec) {
  if (spec.starts_with("http:")) {
    HttpBackendConfig cfg;
    cfg.url = std::string(spec.substr(5));
    cfg.name = std::string(spec);
    return std::make_shared<HttpBackend>(std::move(cfg));
  }
  if (!spec.starts_with("sim")) throw InvalidInput("unknown backend spec '" + std::string(spec) + "'");

  auto rest = spec.substr(3);
  std::string variant;
  if (rest.starts_with(":")) {
    rest.remove_prefix(1);
    auto comma = rest.find(',');
    variant = std::string(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  } else if (rest.starts_with(",")) {
    rest.remove_prefix(1);
  } else if (!rest.empty()) {
    throw InvalidInput("unknown backend spec '" + std::string(spec) + "'");
  }

  SimulatedBackendConfig cfg;
  if (variant.empty() || variant == "oracle") {
    cfg = SimulatedBackend::oracle_config();
  } else if (variant == "collapse") {
    cfg = SimulatedBackend::collapse_config(150);
  } else {
    throw InvalidInput("unknown simulated backend variant '" + variant + "'");
  }
  cfg.name = std::string(spec);

  for (const auto& [key, value] : parse_options(rest)) {
    if (key == "D") {
      cfg.discrimination_capacity = static_cast<std::int64_t>(to_double(key, value));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_double(key, value));
    } else if (key == "noise") {
      cfg.flip_noise = to_double(key, value);
    } else if (key == "halluc") {
      cfg.hallucination_rate = to_double(key, value);
    } else if (key == "lat") {
      cfg.latency_base = to_double(key, value);
    } else if (key == "lat_tok") {
      cfg.latency_per_token = to_double(key, value);
    } else if (key == "p_in") {
      cfg.pricing.input = to_double(key, value);
    } else if (key == "p_out") {
      cfg.pricing.output = to_double(key, value);
    } else if (key == "window") {
      cfg.native_window = static_cast<std::int64_t>(to_double(key, value));
    } else if (key == "merge") {
      cfg.merge_threshold = to_double(key, value);
    } else if (key == "name") {
      cfg.name = value;
    } else {
      throw InvalidInput("unknown simulated backend option '" + key + "'");
    }
  }
  return std::make_shared<SimulatedBackend>(std::move(cfg));
}

}  // namespace semroute
