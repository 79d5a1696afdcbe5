#pragma once
// Analytic cost model for batched matching prompts: how many events fit in
// one prompt next to a cluster's subscriptions, how many invocations a
// queue needs, what that costs in time and money, and the window size
// at which clustering stops paying for itself.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "semroute/model.hpp"

namespace semroute::cost {

// Default estimator for free text: ceil(characters / 4).
std::int64_t estimate_tokens(std::string_view text);

// floor((W - t_inst - n*t_s - t_resp) / t_e), possibly < 1.
std::int64_t batch_capacity(const TokenBudget& budget, std::int64_t n_subs);

// batch_capacity, but throws BatchInfeasible when fewer than one event fits.
std::int64_t b_max(const TokenBudget& budget, std::int64_t n_subs);

// Largest n_subs for which one event still fits (-1 if none).
std::int64_t max_subscriptions_for_one_event(const TokenBudget& budget);

// Extra events per invocation freed by compressing n_subs at ratio rho.
// Throws InvalidInput unless 0 < rho <= 1.
std::int64_t delta_b(const TokenBudget& budget, std::int64_t n_subs_original, double rho);

// ceil(m_c / b_max); 0 for an empty queue. Throws BatchInfeasible when
// b_max < 1 and m_c > 0.
std::int64_t invocations(std::int64_t m_c, std::int64_t b_max);

std::int64_t rounds(std::int64_t total_invocations, std::int64_t parallel);

// ceil(I / P) * t_llm. Throws InvalidInput when P < 1.
double latency(std::int64_t total_invocations, std::int64_t parallel, double t_llm_mean);

// Window size at which k clusters compressed at rho batch as many events as
// one uncompressed prompt. Throws InvalidInput when k < 2.
double w_cross(const TokenBudget& budget, std::int64_t n_subs, double rho, std::int64_t k);

// (T_prompt * p_in + T_response * p_out) / m. Throws InvalidInput when m < 1.
double token_cost(std::int64_t prompt_tokens, std::int64_t response_tokens, double p_in,
                  double p_out, std::int64_t m);

struct ClusterLoad {
  std::int64_t n_subs = 0;  // |c.S'|
  std::int64_t m_c = 0;     // events routed to the cluster
};

struct CostPrediction {
  std::vector<std::int64_t> b_max;  // per cluster
  std::vector<std::int64_t> I_c;    // per cluster
  std::int64_t I = 0;
  std::int64_t R = 0;
  double L = 0.0;
};

CostPrediction predict(const TokenBudget& budget, const std::vector<ClusterLoad>& clusters,
                       std::int64_t parallel, double t_llm_mean);

enum class Stratum { Trivial, NonTrivial };
std::string_view to_string(Stratum s);

struct ValidationCell {
  std::string config;
  std::int64_t k = 0;
  std::int64_t cluster = 0;
  std::int64_t m_c = 0;
  std::int64_t b_max = 0;
  std::int64_t I_pred = 0;
  std::int64_t I_meas = 0;

  double ratio() const { return static_cast<double>(I_pred) / static_cast<double>(I_meas); }
  Stratum stratum() const { return m_c <= b_max ? Stratum::Trivial : Stratum::NonTrivial; }
  bool in_band() const { return ratio() >= 0.5 && ratio() <= 2.0; }
};

struct StratumSummary {
  std::size_t cells = 0;
  std::size_t in_band = 0;
  double median_ratio = 0.0;
};

struct ValidationSummary {
  std::size_t cells = 0;
  double median_ratio = 0.0;
  double fraction_in_band = 0.0;
  std::size_t under_predictions = 0;
  std::size_t exact = 0;
  StratumSummary trivial;
  StratumSummary non_trivial;
};

// Throws InvalidInput when a cell has I_meas < 1.
ValidationSummary validate_predictions(const std::vector<ValidationCell>& cells);

// CSV: config,k,cluster,m_c,b_max,I_pred,I_meas,ratio,stratum
void write_cells_csv(std::ostream& out, const std::vector<ValidationCell>& cells);
std::vector<ValidationCell> read_cells_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const ValidationSummary& s);

}  // namespace semroute::cost
