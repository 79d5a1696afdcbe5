#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "semroute/backend.hpp"
#include "semroute/costmodel.hpp"
#include "semroute/errors.hpp"

namespace semroute {

using nlohmann::json;

namespace {

// The schema object may be the body itself or sit as a string under a
// conventional key when the endpoint wraps model output.
std::string extract_payload(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    return body;
  }
  if (doc.is_object()) {
    for (const char* key : {"content", "text"}) {
      if (doc.contains(key) && doc[key].is_string() && !doc.contains("matches") && !doc.contains("covers")) {
        return doc[key].get<std::string>();
      }
    }
  }
  return body;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  const std::string_view url = cfg_.url;
  if (!url.starts_with("http://")) {
    throw InvalidInput("http backend URL must start with http:// (got '" + cfg_.url + "')");
  }
  const auto path_pos = url.find('/', 7);
  host_ = std::string(url.substr(0, path_pos));
  path_ = path_pos == std::string_view::npos ? "/" : std::string(url.substr(path_pos));
  if (host_.size() <= 7) throw InvalidInput("http backend URL has no host");
}

std::int64_t HttpBackend::count_tokens(std::string_view text) const {
  return cfg_.tokenizer ? cfg_.tokenizer(text) : cost::estimate_tokens(text);
}

HttpBackend::RawReply HttpBackend::post(const Prompt& p) const {
  httplib::Client client(host_);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const json body = {{"system", p.system}, {"user", p.user}, {"max_tokens", p.max_tokens}, {"temperature", 0}};

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!res) {
    throw BackendUnavailable("POST " + cfg_.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendUnavailable("POST " + cfg_.url + " returned HTTP " + std::to_string(res->status));
  }
  return {res->body, elapsed};
}

CallResult<CoverMergeDecision> HttpBackend::cover_merge(std::span<const Subscription> subs) const {
  const auto prompt = cover_merge_prompt(subs);
  CallResult<CoverMergeDecision> out;
  for (int attempt = 0;; ++attempt) {
    auto reply = post(prompt);
    out.usage.prompt_tokens += count_tokens(prompt.system) + count_tokens(prompt.user);
    out.usage.response_tokens += count_tokens(reply.body);
    out.usage.latency_s += reply.latency_s;
    ++out.usage.calls;
    try {
      out.payload = parse_cover_merge_response(extract_payload(reply.body), subs.size());
      return out;
    } catch (const BackendProtocolError&) {
      if (attempt >= 1) throw;
    }
  }
}

CallResult<MatchResponse> HttpBackend::match(std::span<const Subscription> subs,
                                             std::span<const Event> events, std::int64_t kappa,
                                             const TokenBudget& budget) const {
  const auto prompt = match_prompt(subs, events, kappa, budget.t_resp);
  CallResult<MatchResponse> out;
  for (int attempt = 0;; ++attempt) {
    auto reply = post(prompt);
    out.usage.prompt_tokens += count_tokens(prompt.system) + count_tokens(prompt.user);
    out.usage.response_tokens += count_tokens(reply.body);
    out.usage.latency_s += reply.latency_s;
    ++out.usage.calls;
    try {
      out.payload = parse_match_response(extract_payload(reply.body), events.size(), kappa);
      return out;
    } catch (const BackendProtocolError&) {
      if (attempt >= 1) throw;
    }
  }
}

}  // namespace semroute
