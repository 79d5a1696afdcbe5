#include "semroute/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "semroute/csv.hpp"
#include "semroute/errors.hpp"

namespace semroute::cost {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Products like (1 - 0.6) * 2000 / 50 land a hair off the integer in binary
// floating point; flooring needs to see through that.
constexpr double kFloorSlack = 1e-9;

}  // namespace

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t batch_capacity(const TokenBudget& budget, std::int64_t n_subs) {
  if (budget.t_e <= 0) throw InvalidInput("t_e must be positive");
  return floor_div(budget.window - budget.t_inst - n_subs * budget.t_s - budget.t_resp, budget.t_e);
}

std::int64_t b_max(const TokenBudget& budget, std::int64_t n_subs) {
  const auto b = batch_capacity(budget, n_subs);
  if (b < 1) {
    throw BatchInfeasible("no event fits next to " + std::to_string(n_subs) +
                          " subscriptions in a " + std::to_string(budget.window) + "-token window");
  }
  return b;
}

std::int64_t max_subscriptions_for_one_event(const TokenBudget& budget) {
  if (budget.t_s == 0) {
    return batch_capacity(budget, 0) >= 1 ? INT64_MAX : -1;
  }
  const std::int64_t room = budget.window - budget.t_inst - budget.t_resp - budget.t_e;
  if (room < 0) return -1;
  return room / budget.t_s;
}

std::int64_t delta_b(const TokenBudget& budget, std::int64_t n_subs_original, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("rho must lie in (0, 1]");
  if (budget.t_e <= 0) throw InvalidInput("t_e must be positive");
  const double freed = (1.0 - rho) * static_cast<double>(n_subs_original) *
                       static_cast<double>(budget.t_s) / static_cast<double>(budget.t_e);
  return static_cast<std::int64_t>(std::floor(freed + kFloorSlack));
}

std::int64_t invocations(std::int64_t m_c, std::int64_t b_max) {
  if (m_c <= 0) return 0;
  if (b_max < 1) throw BatchInfeasible("b_max < 1 with " + std::to_string(m_c) + " queued events");
  return ceil_div(m_c, b_max);
}

std::int64_t rounds(std::int64_t total_invocations, std::int64_t parallel) {
  if (parallel < 1) throw InvalidInput("parallelism P must be >= 1");
  return ceil_div(std::max<std::int64_t>(total_invocations, 0), parallel);
}

double latency(std::int64_t total_invocations, std::int64_t parallel, double t_llm_mean) {
  return static_cast<double>(rounds(total_invocations, parallel)) * t_llm_mean;
}

double w_cross(const TokenBudget& budget, std::int64_t n_subs, double rho, std::int64_t k) {
  if (k < 2) throw InvalidInput("w_cross needs k >= 2 (k = 1 has a singular denominator)");
  const double kk = static_cast<double>(k);
  return static_cast<double>(budget.t_inst + budget.t_resp) +
         static_cast<double>(budget.t_s * n_subs) * (1.0 - rho / kk) / (1.0 - 1.0 / kk);
}

double token_cost(std::int64_t prompt_tokens, std::int64_t response_tokens, double p_in,
                  double p_out, std::int64_t m) {
  if (m < 1) throw InvalidInput("per-event cost needs m >= 1");
  return (static_cast<double>(prompt_tokens) * p_in + static_cast<double>(response_tokens) * p_out) /
         static_cast<double>(m);
}

CostPrediction predict(const TokenBudget& budget, const std::vector<ClusterLoad>& clusters,
                       std::int64_t parallel, double t_llm_mean) {
  CostPrediction p;
  for (const auto& c : clusters) {
    const auto b = batch_capacity(budget, c.n_subs);
    p.b_max.push_back(b);
    const auto i = invocations(c.m_c, b);
    p.I_c.push_back(i);
    p.I += i;
  }
  p.R = rounds(p.I, parallel);
  p.L = latency(p.I, parallel, t_llm_mean);
  return p;
}

std::string_view to_string(Stratum s) {
  return s == Stratum::Trivial ? "trivial" : "non-trivial";
}

ValidationSummary validate_predictions(const std::vector<ValidationCell>& cells) {
  ValidationSummary s;
  std::vector<double> all, triv, nontriv;
  for (const auto& c : cells) {
    if (c.I_meas < 1) throw InvalidInput("validation cell with I_meas < 1");
    const double r = c.ratio();
    all.push_back(r);
    ++s.cells;
    if (c.in_band()) ++(s.fraction_in_band);
    if (c.I_pred < c.I_meas) ++s.under_predictions;
    if (c.I_pred == c.I_meas) ++s.exact;
    auto& st = c.stratum() == Stratum::Trivial ? s.trivial : s.non_trivial;
    (c.stratum() == Stratum::Trivial ? triv : nontriv).push_back(r);
    ++st.cells;
    if (c.in_band()) ++st.in_band;
  }
  s.median_ratio = median(all);
  s.fraction_in_band = s.cells ? s.fraction_in_band / static_cast<double>(s.cells) : 0.0;
  s.trivial.median_ratio = median(triv);
  s.non_trivial.median_ratio = median(nontriv);
  return s;
}

void write_cells_csv(std::ostream& out, const std::vector<ValidationCell>& cells) {
  out << "config,k,cluster,m_c,b_max,I_pred,I_meas,ratio,stratum\n";
  for (const auto& c : cells) {
    out << csv::escape(c.config) << ',' << c.k << ',' << c.cluster << ',' << c.m_c << ','
        << c.b_max << ',' << c.I_pred << ',' << c.I_meas << ',' << csv::number(c.ratio()) << ','
        << to_string(c.stratum()) << '\n';
  }
}

std::vector<ValidationCell> read_cells_csv(std::istream& in) {
  auto table = csv::read(in);
  std::vector<ValidationCell> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ValidationCell c;
    try {
      c.config = table.get(row, "config", "");
      c.k = std::stoll(table.get(row, "k", "0"));
      c.cluster = std::stoll(table.get(row, "cluster", "0"));
      c.m_c = std::stoll(table.get(row, "m_c"));
      c.b_max = std::stoll(table.get(row, "b_max"));
      c.I_meas = std::stoll(table.get(row, "I_meas"));
      const auto pred = table.get(row, "I_pred", "");
      c.I_pred = pred.empty() ? invocations(c.m_c, c.b_max) : std::stoll(pred);
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("bad cell row: ") + e.what(), r + 2);
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

void write_summary_csv(std::ostream& out, const ValidationSummary& s) {
  out << "stratum,cells,median_ratio,fraction_in_band,under_predictions,exact\n";
  out << "all," << s.cells << ',' << csv::number(s.median_ratio) << ','
      << csv::number(s.fraction_in_band) << ',' << s.under_predictions << ',' << s.exact << '\n';
  auto row = [&](std::string_view name, const StratumSummary& st) {
    const double frac = st.cells ? static_cast<double>(st.in_band) / static_cast<double>(st.cells) : 0.0;
    out << name << ',' << st.cells << ',' << csv::number(st.median_ratio) << ','
        << csv::number(frac) << ",,\n";
  };
  row("trivial", s.trivial);
  row("non-trivial", s.non_trivial);
}

}  // namespace semroute::cost
