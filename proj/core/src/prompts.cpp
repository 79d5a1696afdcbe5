#include "semroute/prompts.hpp"

namespace semroute {

namespace {

constexpr const char* kCoverMergeSystem =
    "You are a content-router optimiser. Given a list of natural-language\n"
    "subscription descriptions, identify pairs (i, j) where subscription i covers\n"
    "j (i.e., every event matching j also matches i) and pairs (i, j) where two\n"
    "subscriptions overlap enough to be merged into a single combined description.\n"
    "Return JSON only.";

constexpr const char* kMatchSystem =
    "You are a content router. For each event below, return up to K\n"
    "subscription IDs whose descriptions match the event's content. Return JSON\n"
    "only; no commentary.";

std::string single_line(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

std::string format_subs(std::span<const Subscription> subs) {
  std::string out;
  for (const auto& s : subs) out += "[" + s.id + "] " + single_line(s.description) + "\n";
  return out;
}

}  // namespace

Prompt cover_merge_prompt(std::span<const Subscription> subs) {
  Prompt p;
  p.system = kCoverMergeSystem;
  p.user = "Subscriptions:\n" + format_subs(subs) +
           "\n"
           "Return JSON with keys \"covers\" and \"merges\", each a list of [i, j] index\n"
           "pairs. Use indices from the list above (1-based). Return {} if no pair\n"
           "qualifies.";
  p.max_tokens = 512;
  return p;
}

Prompt match_prompt(std::span<const Subscription> subs, std::span<const Event> events,
                    std::int64_t kappa, std::int64_t max_tokens) {
  Prompt p;
  p.system = kMatchSystem;
  std::string batch;
  for (std::size_t i = 0; i < events.size(); ++i) {
    batch += "[" + std::to_string(i + 1) + "] " + single_line(events[i].text) + "\n";
  }
  p.user = "Subscriptions ([id] description):\n" + format_subs(subs) + "\nEvents:\n" + batch +
           "\n"
           "Return JSON of the form {\"matches\": [[event_idx, sub_id], ...]} where\n"
           "event_idx is 1-based and sub_id is the [id] from the subscription list.\n"
           "At most K=" +
           std::to_string(kappa) +
           " subscriptions per event; omit events with no matching\n"
           "subscription.";
  p.max_tokens = max_tokens;
  return p;
}

}  // namespace semroute
