#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subgrad/absolute_probability.hpp"
#include "subgrad/engine.hpp"
#include "subgrad/error.hpp"
#include "subgrad/io.hpp"
#include "subgrad/matrix_sequence.hpp"
#include "subgrad/problems.hpp"
#include "subgrad/stochastic_matrix.hpp"

namespace subgrad {

/// Per-snapshot measurements. The four descent terms are the summands that
/// bound ||xbar(t+1) - u||^2 - ||xbar(t) - u||^2 with u the cached minimizer:
/// squared step, weighted objective difference, step spread coupling, and
/// disagreement coupling.
struct DiagnosticsRow {
  long t = 0;
  double consensus_error = 0.0;  // max_i ||x_i(t) - X(t)^T pi(t)||_2
  double objective_gap = 0.0;    // f(X(t)^T pi(t)) - f(x*)
  double state_norm = 0.0;       // ||X(t)||_inf
  double sqrt_t_ratio = 0.0;     // state_norm / sqrt(t + 1)
  std::optional<double> tau_upto_t;
  std::array<double, 4> descent_terms{0.0, 0.0, 0.0, 0.0};
};

struct MeasureContext {
  const ConvexProblem* problem = nullptr;
  const AbsProbSequence* abs_prob = nullptr;
  const MatrixSequence* seq = nullptr;     // only consulted for tau_upto_t
  const StepSchedule* schedule = nullptr;  // delta source when measuring bare states
  bool with_tau = false;
  std::vector<double> x_star;
  double f_star = 0.0;
};

inline MeasureContext make_measure_context(const ConvexProblem& problem,
                                           const AbsProbSequence& abs_prob,
                                           const MatrixSequence* seq = nullptr,
                                           bool with_tau = false) {
  MeasureContext ctx;
  ctx.problem = &problem;
  ctx.abs_prob = &abs_prob;
  ctx.seq = seq;
  ctx.with_tau = with_tau;
  ctx.x_star = problem.minimizer();
  ctx.f_star = problem.global_cost(ctx.x_star);
  return ctx;
}

namespace detail {

inline std::vector<double> weighted_average(std::span<const double> state,
                                            const std::vector<double>& pi, int n, int d) {
  std::vector<double> xbar(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      xbar[static_cast<std::size_t>(k)] +=
          pi[static_cast<std::size_t>(i)] * state[static_cast<std::size_t>(i) * d + k];
  return xbar;
}

inline double l2_row_distance(std::span<const double> state, int i, int d,
                              const std::vector<double>& point) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    const double diff = state[static_cast<std::size_t>(i) * d + k] - point[static_cast<std::size_t>(k)];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Measurement core; `delta` is the effective per-agent step applied at t
/// (zeros when nothing follows, which zeroes the descent terms).
inline DiagnosticsRow measure_at(long t, std::span<const double> state,
                                 std::span<const double> delta, const MeasureContext& ctx) {
  const ConvexProblem& problem = *ctx.problem;
  const int n = problem.agents(), d = problem.dim();
  if (static_cast<int>(state.size()) != n * d)
    throw Error(Errc::dimension_mismatch, "state block size");
  const std::vector<double>& pi = ctx.abs_prob->at(t);
  const std::vector<double>& pi_next = ctx.abs_prob->at(t + 1);
  DiagnosticsRow row;
  row.t = t;
  const auto xbar = detail::weighted_average(state, pi, n, d);
  double worst = 0.0;
  double sum_l_dev = 0.0;  // sum_i L_i ||xbar - x_i||_2
  for (int i = 0; i < n; ++i) {
    const double dev = detail::l2_row_distance(state, i, d, xbar);
    worst = std::max(worst, dev);
    sum_l_dev += problem.subgradient_bound(i) * dev;
  }
  row.consensus_error = worst;
  row.objective_gap = problem.global_cost(xbar) - ctx.f_star;
  double norm = 0.0;
  for (double v : state) norm = std::max(norm, std::abs(v));
  row.state_norm = norm;
  row.sqrt_t_ratio = norm / std::sqrt(static_cast<double>(t) + 1.0);
  if (ctx.with_tau && ctx.seq)
    row.tau_upto_t = ergodicity_coefficient(backward_product(*ctx.seq, 0, t).matrix);

  double dinf = 0.0, max_l = 0.0, sum_l = 0.0;
  for (int i = 0; i < n; ++i) {
    dinf = std::max(dinf, delta.empty() ? 0.0 : delta[static_cast<std::size_t>(i)]);
    max_l = std::max(max_l, problem.subgradient_bound(i));
    sum_l += problem.subgradient_bound(i);
  }
  double weighted_l1 = 0.0, w_min = 0.0, w_max = 0.0;
  double gap_sum = 0.0;  // sum_i (f_i(u) - f_i(xbar))
  for (int i = 0; i < n; ++i) {
    const double di = delta.empty() ? 0.0 : delta[static_cast<std::size_t>(i)];
    const double w = pi_next[static_cast<std::size_t>(i)] * di;
    weighted_l1 += std::abs(w);
    if (i == 0) {
      w_min = w_max = w;
    } else {
      w_min = std::min(w_min, w);
      w_max = std::max(w_max, w);
    }
    gap_sum += problem.cost(i, ctx.x_star) - problem.cost(i, xbar);
  }
  double star_dist = 0.0;
  for (int k = 0; k < d; ++k) {
    const double diff = xbar[static_cast<std::size_t>(k)] - ctx.x_star[static_cast<std::size_t>(k)];
    star_dist += diff * diff;
  }
  star_dist = std::sqrt(star_dist);
  row.descent_terms[0] = dinf * dinf * max_l * max_l;
  row.descent_terms[1] = 2.0 / static_cast<double>(n) * weighted_l1 * gap_sum;
  row.descent_terms[2] = 2.0 * (w_max - w_min) * sum_l * star_dist;
  row.descent_terms[3] = 4.0 * dinf * sum_l_dev;
  for (double v : {row.consensus_error, row.objective_gap, row.state_norm, row.sqrt_t_ratio})
    if (!std::isfinite(v)) throw Error(Errc::non_finite_state, "non-finite diagnostic at t=" + std::to_string(t));
  return row;
}

inline DiagnosticsRow measure(const AgentStates& s, const MeasureContext& ctx) {
  std::vector<double> delta(static_cast<std::size_t>(s.n), 0.0);
  if (ctx.schedule) ctx.schedule->delta_at(s.t, delta);
  return measure_at(s.t, s.x, delta, ctx);
}

inline DiagnosticsRow measure(const PushSumStates& s, const MeasureContext& ctx) {
  std::vector<double> delta(static_cast<std::size_t>(s.n), 0.0);
  if (ctx.schedule) ctx.schedule->delta_at(s.t, delta);
  const auto z = s.ratios();
  return measure_at(s.t, z, delta, ctx);
}

/// One row per snapshot, using each snapshot's recorded effective step.
inline std::vector<DiagnosticsRow> measure_trajectory(const Trajectory& traj,
                                                      const MeasureContext& ctx) {
  std::vector<DiagnosticsRow> rows;
  rows.reserve(traj.snapshots.size());
  for (const auto& snap : traj.snapshots) rows.push_back(measure_at(snap.t, snap.state, snap.delta, ctx));
  return rows;
}

/// Worst L1 deviation of an agent from the weighted average, the quantity the
/// consensus contraction statement drives to zero.
inline double consensus_l1(std::span<const double> state, const std::vector<double>& pi, int n,
                           int d) {
  const auto xbar = detail::weighted_average(state, pi, n, d);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k)
      s += std::abs(state[static_cast<std::size_t>(i) * d + k] - xbar[static_cast<std::size_t>(k)]);
    worst = std::max(worst, s);
  }
  return worst;
}

/// (t, tau(P(t, 0))) for t in [0, t_max]; capped because each point costs a
/// matrix product.
inline std::vector<std::pair<long, double>> tau_decay_profile(const MatrixSequence& seq,
                                                              long t_max) {
  if (t_max > 1000) throw Error(Errc::config_invalid, "tau profile capped at t_max = 1000");
  if (t_max < 0) throw Error(Errc::time_order, "negative t_max");
  if (seq.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "tau profile is defined over row-stochastic factors");
  std::vector<std::pair<long, double>> profile;
  profile.reserve(static_cast<std::size_t>(t_max) + 1);
  StochasticMatrix acc = StochasticMatrix::identity(seq.n());
  for (long t = 0; t <= t_max; ++t) {
    profile.emplace_back(t, ergodicity_coefficient(acc));
    if (t < t_max) acc = multiply(seq.at(t), acc);
  }
  return profile;
}

/// Consecutive-snapshot descent inequality: ||xbar(t+1) - x*||^2 must not
/// exceed ||xbar(t) - x*||^2 plus the four measured terms. Only adjacent
/// snapshot pairs are checked, so run with an every-step cadence.
struct DescentCheck {
  long t = 0;
  double lhs_sq = 0.0;
  double rhs_sq = 0.0;
  bool holds = false;
};

inline std::vector<DescentCheck> descent_inequality_profile(const Trajectory& traj,
                                                            const MeasureContext& ctx,
                                                            double slack = 1e-9) {
  const int n = ctx.problem->agents(), d = ctx.problem->dim();
  std::vector<DescentCheck> checks;
  for (std::size_t s = 0; s + 1 < traj.snapshots.size(); ++s) {
    const auto& cur = traj.snapshots[s];
    const auto& nxt = traj.snapshots[s + 1];
    if (nxt.t != cur.t + 1) continue;
    const auto row = measure_at(cur.t, cur.state, cur.delta, ctx);
    const auto xbar_now = detail::weighted_average(cur.state, ctx.abs_prob->at(cur.t), n, d);
    const auto xbar_next = detail::weighted_average(nxt.state, ctx.abs_prob->at(nxt.t), n, d);
    double lhs = 0.0, base = 0.0;
    for (int k = 0; k < d; ++k) {
      const double a = xbar_next[static_cast<std::size_t>(k)] - ctx.x_star[static_cast<std::size_t>(k)];
      const double b = xbar_now[static_cast<std::size_t>(k)] - ctx.x_star[static_cast<std::size_t>(k)];
      lhs += a * a;
      base += b * b;
    }
    DescentCheck chk;
    chk.t = cur.t;
    chk.lhs_sq = lhs;
    chk.rhs_sq = base + row.descent_terms[0] + row.descent_terms[1] + row.descent_terms[2] +
                 row.descent_terms[3];
    chk.holds = chk.lhs_sq <= chk.rhs_sq + slack;
    checks.push_back(chk);
  }
  return checks;
}

inline std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows,
                                   const std::string& preamble) {
  std::string out = preamble;
  out += "t,consensus_error,objective_gap,state_norm,sqrt_t_ratio\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t);
    out += ',';
    out += format_double(r.consensus_error);
    out += ',';
    out += format_double(r.objective_gap);
    out += ',';
    out += format_double(r.state_norm);
    out += ',';
    out += format_double(r.sqrt_t_ratio);
    out += '\n';
  }
  return out;
}

}  // namespace subgrad
