#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subgrad/absolute_probability.hpp"
#include "subgrad/error.hpp"
#include "subgrad/matrix_sequence.hpp"
#include "subgrad/problems.hpp"
#include "subgrad/step_schedules.hpp"
#include "subgrad/stochastic_matrix.hpp"

namespace subgrad {

/// Iterate block X(t): row i is agent i's d-dimensional state.
struct AgentStates {
  long t = 0;
  int n = 0;
  int d = 0;
  std::vector<double> x;  // row-major n x d
};

/// Mass-weighted state (w, y) of the push variants; the working iterates are
/// the ratios z_i = w_i / y_i.
struct PushSumStates {
  long t = 0;
  int n = 0;
  int d = 0;
  std::vector<double> w;  // row-major n x d
  std::vector<double> y;  // n, strictly positive

  std::vector<double> ratios() const {
    std::vector<double> z(w.size());
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k)
        z[static_cast<std::size_t>(i) * d + k] =
            w[static_cast<std::size_t>(i) * d + k] / y[static_cast<std::size_t>(i)];
    return z;
  }
};

/// When to record a snapshot. Geometric cadence records powers of two;
/// `every` records multiples of k. Time 0 and the final step are always kept.
struct SnapshotPlan {
  enum class Kind { geometric, every };
  Kind kind = Kind::geometric;
  long every = 1;
  std::vector<long> extra;

  bool want(long t, long final_step) const {
    if (t == 0 || t == final_step) return true;
    if (std::find(extra.begin(), extra.end(), t) != extra.end()) return true;
    if (kind == Kind::every) return every > 0 && t % every == 0;
    return (t & (t - 1)) == 0;
  }
};

struct RunOptions {
  long steps = 0;
  SnapshotPlan snapshots;
  // Applies to the diagonal-scaled runner only: descend only once the scaling
  // diagonal exceeds 1e-6 instead of failing on a vanishing divisor.
  bool skip_descent_until_positive = false;
};

/// State recorded at time t. `delta` is the effective per-agent step applied
/// by the transition leaving t (zeros at the final snapshot, where no
/// transition follows). The cumulative sums cover exactly k < t.
struct Snapshot {
  long t = 0;
  std::vector<double> state;  // n x d: x for direct runners, w/y for push runners
  std::vector<double> y;      // push runners only
  std::vector<double> delta;  // n
  double cum_delta_sq = 0.0;  // sum_{k<t} ||D(k)||_inf^2
  double cum_delta_abs = 0.0; // sum_{k<t} ||D(k)||_inf
};

struct Trajectory {
  std::string algorithm;
  int n = 0;
  int d = 0;
  long steps = 0;
  std::vector<Snapshot> snapshots;
  std::vector<std::pair<long, int>> skipped_descents;  // (t, agent)
};

namespace detail {

inline void check_finite(std::span<const double> x, long t) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      throw Error(Errc::non_finite_state,
                  "non-finite state entry " + std::to_string(i) + " at t=" + std::to_string(t));
}

// out = P x, accumulated row-major; the loop order is pinned for
// reproducibility.
inline void apply_mix(const StochasticMatrix& p, std::span<const double> x, int d,
                      std::span<double> out) {
  const int n = p.n();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += p(i, j) * x[static_cast<std::size_t>(j) * d + k];
      out[static_cast<std::size_t>(i) * d + k] = acc;
    }
}

inline std::vector<double> apply_matrix_vector(const StochasticMatrix& a,
                                               const std::vector<double>& y) {
  const int n = a.n();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += a(i, j) * y[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

inline void subgradients(const ConvexProblem& problem, std::span<const double> x, int n, int d,
                         std::span<double> g) {
  for (int i = 0; i < n; ++i)
    problem.subgradient(i, x.subspan(static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)),
                        g.subspan(static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)));
}

inline double power_step(double c, double alpha, long t) {
  return c * std::pow(static_cast<double>(t) + 1.0, alpha);
}

// Step divided by the running diagonal of P^t; shared by the runner and its
// embedding so both sides perform identical floating-point operations.
inline double scaled_step(double base, double z_ii, bool skip_until_positive, long t, int agent,
                          bool* skipped = nullptr) {
  if (skip_until_positive && z_ii <= 1e-6) {
    if (skipped) *skipped = true;
    return 0.0;
  }
  if (z_ii <= 1e-14)
    throw Error(Errc::zero_diagonal_divisor, "diagonal z_" + std::to_string(agent) + "," +
                                                 std::to_string(agent) + "(" + std::to_string(t) +
                                                 ") = " + std::to_string(z_ii));
  return base / z_ii;
}

// Tracks Z(t) = P^t and exposes its diagonal.
class PowerDiagonalTracker {
 public:
  explicit PowerDiagonalTracker(const StochasticMatrix& p)
      : p_(p), z_(static_cast<std::size_t>(p.n()) * p.n(), 0.0) {
    for (int i = 0; i < p.n(); ++i) z_[static_cast<std::size_t>(i) * p.n() + i] = 1.0;
  }

  double diagonal(int i) const { return z_[static_cast<std::size_t>(i) * p_.n() + i]; }

  void advance() { z_ = multiply_raw(p_.n(), p_.data(), z_); }

 private:
  StochasticMatrix p_;
  std::vector<double> z_;
};

struct SnapshotRecorder {
  Trajectory* traj;
  SnapshotPlan plan;
  long steps;
  double cum_sq = 0.0;
  double cum_abs = 0.0;

  void maybe_record(long t, std::span<const double> state, std::span<const double> y,
                    std::span<const double> delta) {
    if (!plan.want(t, steps)) return;
    Snapshot s;
    s.t = t;
    s.state.assign(state.begin(), state.end());
    s.y.assign(y.begin(), y.end());
    s.delta.assign(delta.begin(), delta.end());
    s.cum_delta_sq = cum_sq;
    s.cum_delta_abs = cum_abs;
    traj->snapshots.push_back(std::move(s));
  }

  void account(std::span<const double> delta) {
    double dinf = 0.0;
    for (double d : delta) dinf = std::max(dinf, d);
    cum_sq += dinf * dinf;
    cum_abs += dinf;
  }
};

}  // namespace detail

/// One transition of the unified iteration: X(t+1) = P(t) X(t) - D(t) G(t),
/// where row i of g holds a subgradient of f_i at x_i(t).
inline AgentStates unified_step(const AgentStates& s, const StochasticMatrix& p,
                                std::span<const double> delta, std::span<const double> g) {
  if (p.n() != s.n) throw Error(Errc::dimension_mismatch, "mixing matrix size");
  if (static_cast<int>(delta.size()) != s.n) throw Error(Errc::dimension_mismatch, "delta size");
  if (g.size() != s.x.size()) throw Error(Errc::dimension_mismatch, "subgradient block size");
  if (p.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "unified iteration mixes with row-stochastic matrices");
  AgentStates next;
  next.t = s.t + 1;
  next.n = s.n;
  next.d = s.d;
  next.x.resize(s.x.size());
  detail::apply_mix(p, s.x, s.d, next.x);
  for (int i = 0; i < s.n; ++i)
    for (int k = 0; k < s.d; ++k)
      next.x[static_cast<std::size_t>(i) * s.d + k] -=
          delta[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i) * s.d + k];
  detail::check_finite(next.x, next.t);
  return next;
}

namespace detail {

inline void check_direct_inputs(const ConvexProblem& problem, const MatrixSequence& seq,
                                const StepSchedule& schedule, const std::vector<double>& x0) {
  if (seq.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "runner needs a row-stochastic sequence");
  if (seq.n() != problem.agents() || schedule.agents() != problem.agents())
    throw Error(Errc::dimension_mismatch, "agent counts disagree");
  if (static_cast<int>(x0.size()) != problem.agents() * problem.dim())
    throw Error(Errc::dimension_mismatch, "x0 size");
}

inline Trajectory run_direct(const std::string& label, const ConvexProblem& problem,
                             const MatrixSequence& seq, const StepSchedule& schedule,
                             const std::vector<double>& x0, const RunOptions& opt,
                             bool descend_before_mix) {
  check_direct_inputs(problem, seq, schedule, x0);
  const int n = problem.agents(), d = problem.dim();
  Trajectory traj{label, n, d, opt.steps, {}, {}};
  detail::SnapshotRecorder rec{&traj, opt.snapshots, opt.steps};
  AgentStates s{0, n, d, x0};
  detail::check_finite(s.x, 0);
  std::vector<double> delta(static_cast<std::size_t>(n));
  std::vector<double> g(static_cast<std::size_t>(n) * d);
  std::vector<double> work(static_cast<std::size_t>(n) * d);
  const bool constant = seq.rule() == MatrixSequence::Rule::constant;
  const StochasticMatrix p0 = seq.at(0);
  for (long t = 0; t < opt.steps; ++t) {
    schedule.delta_at(t, delta);
    detail::subgradients(problem, s.x, n, d, g);
    rec.maybe_record(t, s.x, {}, delta);
    const StochasticMatrix p = constant ? p0 : seq.at(t);
    if (descend_before_mix) {
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k)
          work[static_cast<std::size_t>(i) * d + k] =
              s.x[static_cast<std::size_t>(i) * d + k] -
              delta[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i) * d + k];
      detail::apply_mix(p, work, d, s.x);
      s.t = t + 1;
      detail::check_finite(s.x, s.t);
    } else {
      s = unified_step(s, p, delta, g);
    }
    rec.account(delta);
  }
  std::fill(delta.begin(), delta.end(), 0.0);
  rec.maybe_record(opt.steps, s.x, {}, delta);
  return traj;
}

}  // namespace detail

/// Unified iteration driven by an arbitrary schedule.
inline Trajectory run_unified(const ConvexProblem& problem, const MatrixSequence& seq,
                              const StepSchedule& schedule, const std::vector<double>& x0,
                              const RunOptions& opt) {
  return detail::run_direct("unified", problem, seq, schedule, x0, opt, false);
}

/// Classic consensus descent: doubly stochastic mixing, one common step size.
inline Trajectory run_dgd(const ConvexProblem& problem, const MatrixSequence& seq,
                          const StepSchedule& schedule, const std::vector<double>& x0,
                          const RunOptions& opt) {
  if (seq.kind() != Stochasticity::doubly)
    throw Error(Errc::kind_mismatch, "needs a doubly stochastic sequence");
  if (!schedule.agent_independent())
    throw Error(Errc::kind_mismatch, "needs an agent-independent schedule");
  return detail::run_direct("dgd", problem, seq, schedule, x0, opt, false);
}

/// Descend first, then mix: x_i(t+1) = sum_j p_ij(t) (x_j(t) - d_j(t) g_j(t)).
inline Trajectory run_dgd_post(const ConvexProblem& problem, const MatrixSequence& seq,
                               const StepSchedule& schedule, const std::vector<double>& x0,
                               const RunOptions& opt) {
  return detail::run_direct("dgd_post", problem, seq, schedule, x0, opt, true);
}

/// Constant row-stochastic mixing with steps rescaled by the diagonal of P^t:
/// x_i(t+1) = sum_j p_ij x_j(t) - (delta(t) / z_ii(t)) g_i(t), Z(t) = P^t.
inline Trajectory run_row_stochastic(const ConvexProblem& problem, const StochasticMatrix& p,
                                     double c, double alpha, const std::vector<double>& x0,
                                     const RunOptions& opt) {
  if (p.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "runner needs a row-stochastic matrix");
  const int n = problem.agents(), d = problem.dim();
  if (p.n() != n) throw Error(Errc::dimension_mismatch, "matrix size");
  if (static_cast<int>(x0.size()) != n * d) throw Error(Errc::dimension_mismatch, "x0 size");
  Trajectory traj{"row_stochastic", n, d, opt.steps, {}, {}};
  detail::SnapshotRecorder rec{&traj, opt.snapshots, opt.steps};
  AgentStates s{0, n, d, x0};
  detail::check_finite(s.x, 0);
  detail::PowerDiagonalTracker tracker(p);
  std::vector<double> delta(static_cast<std::size_t>(n));
  std::vector<double> g(static_cast<std::size_t>(n) * d);
  for (long t = 0; t < opt.steps; ++t) {
    const double base = detail::power_step(c, alpha, t);
    for (int i = 0; i < n; ++i) {
      bool skipped = false;
      delta[static_cast<std::size_t>(i)] = detail::scaled_step(
          base, tracker.diagonal(i), opt.skip_descent_until_positive, t, i, &skipped);
      if (skipped) traj.skipped_descents.emplace_back(t, i);
    }
    detail::subgradients(problem, s.x, n, d, g);
    rec.maybe_record(t, s.x, {}, delta);
    s = unified_step(s, p, delta, g);
    rec.account(delta);
    tracker.advance();
  }
  std::fill(delta.begin(), delta.end(), 0.0);
  rec.maybe_record(opt.steps, s.x, {}, delta);
  return traj;
}

namespace detail {

inline void check_push_inputs(const ConvexProblem& problem, const MatrixSequence& a_seq,
                              const std::vector<double>& w0, const std::vector<double>& y0) {
  if (a_seq.kind() != Stochasticity::column && a_seq.kind() != Stochasticity::doubly)
    throw Error(Errc::kind_mismatch, "push runners need a column-stochastic sequence");
  if (a_seq.n() != problem.agents()) throw Error(Errc::dimension_mismatch, "agent counts disagree");
  if (static_cast<int>(w0.size()) != problem.agents() * problem.dim())
    throw Error(Errc::dimension_mismatch, "w0 size");
  if (static_cast<int>(y0.size()) != problem.agents())
    throw Error(Errc::dimension_mismatch, "y0 size");
  for (double y : y0)
    if (!(y > 0.0)) throw Error(Errc::nonpositive_mass, "initial masses must be positive");
}

inline void check_mass(const std::vector<double>& y, double mass0, long t) {
  double mass = 0.0;
  for (double v : y) {
    if (!(v > 0.0))
      throw Error(Errc::nonpositive_mass, "mass vanished at t=" + std::to_string(t));
    mass += v;
  }
  if (std::abs(mass - mass0) > 1e-10)
    throw Error(Errc::mass_mismatch, "total mass drifted by " + std::to_string(mass - mass0) +
                                         " at t=" + std::to_string(t));
}

}  // namespace detail

/// Column-stochastic averaging with the descent applied to the mixed value:
/// w(t+1) = A(t)(w(t) - T(t) G(t)), y(t+1) = A(t) y(t), subgradients taken at
/// the pre-descent ratios w_i(t)/y_i(t), T(t) = c (t+1)^alpha I.
inline Trajectory run_subgradient_push(const ConvexProblem& problem, const MatrixSequence& a_seq,
                                       double c, double alpha, const std::vector<double>& w0,
                                       const std::vector<double>& y0, const RunOptions& opt) {
  detail::check_push_inputs(problem, a_seq, w0, y0);
  const int n = problem.agents(), d = problem.dim();
  Trajectory traj{"subgradient_push", n, d, opt.steps, {}, {}};
  detail::SnapshotRecorder rec{&traj, opt.snapshots, opt.steps};
  PushSumStates s{0, n, d, w0, y0};
  double mass0 = 0.0;
  for (double v : y0) mass0 += v;
  std::vector<double> delta(static_cast<std::size_t>(n));
  std::vector<double> g(static_cast<std::size_t>(n) * d);
  std::vector<double> x_hat(static_cast<std::size_t>(n) * d);
  std::vector<double> z(static_cast<std::size_t>(n) * d);
  for (long t = 0; t < opt.steps; ++t) {
    detail::check_mass(s.y, mass0, t);
    const double theta = detail::power_step(c, alpha, t);
    z = s.ratios();
    detail::subgradients(problem, z, n, d, g);
    // Effective unified step: the descent lands before the mix, so the ratio
    // moves by theta / y_i(t) times the subgradient.
    for (int i = 0; i < n; ++i) delta[static_cast<std::size_t>(i)] = theta / s.y[static_cast<std::size_t>(i)];
    rec.maybe_record(t, z, s.y, delta);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k)
        x_hat[static_cast<std::size_t>(i) * d + k] =
            s.w[static_cast<std::size_t>(i) * d + k] - theta * g[static_cast<std::size_t>(i) * d + k];
    const StochasticMatrix a = a_seq.at(t);
    std::vector<double> w_next(static_cast<std::size_t>(n) * d);
    detail::apply_mix(a, x_hat, d, w_next);
    s.w.swap(w_next);
    s.y = detail::apply_matrix_vector(a, s.y);
    s.t = t + 1;
    detail::check_finite(s.w, s.t);
    rec.account(delta);
  }
  detail::check_mass(s.y, mass0, opt.steps);
  z = s.ratios();
  std::fill(delta.begin(), delta.end(), 0.0);
  rec.maybe_record(opt.steps, z, s.y, delta);
  return traj;
}

/// Column-stochastic averaging with the descent applied inside the mix:
/// w_i(t+1) = sum_j a_ij(t) w_j(t) - theta_i(t) g_i(t), subgradients at the
/// same pre-mix ratios w_i(t)/y_i(t).
inline Trajectory run_push_first(const ConvexProblem& problem, const MatrixSequence& a_seq,
                                 double c, double alpha, const std::vector<double>& w0,
                                 const std::vector<double>& y0, const RunOptions& opt) {
  detail::check_push_inputs(problem, a_seq, w0, y0);
  const int n = problem.agents(), d = problem.dim();
  Trajectory traj{"push_first", n, d, opt.steps, {}, {}};
  detail::SnapshotRecorder rec{&traj, opt.snapshots, opt.steps};
  PushSumStates s{0, n, d, w0, y0};
  double mass0 = 0.0;
  for (double v : y0) mass0 += v;
  std::vector<double> delta(static_cast<std::size_t>(n));
  std::vector<double> g(static_cast<std::size_t>(n) * d);
  std::vector<double> z(static_cast<std::size_t>(n) * d);
  for (long t = 0; t < opt.steps; ++t) {
    detail::check_mass(s.y, mass0, t);
    const double theta = detail::power_step(c, alpha, t);
    z = s.ratios();
    detail::subgradients(problem, z, n, d, g);
    const StochasticMatrix a = a_seq.at(t);
    const std::vector<double> y_next = detail::apply_matrix_vector(a, s.y);
    // Effective unified step: the descent joins the mixed numerator, so the
    // ratio moves by theta / y_i(t+1) times the subgradient.
    for (int i = 0; i < n; ++i) {
      if (!(y_next[static_cast<std::size_t>(i)] > 0.0))
        throw Error(Errc::nonpositive_mass, "mass vanished at t=" + std::to_string(t + 1));
      delta[static_cast<std::size_t>(i)] = theta / y_next[static_cast<std::size_t>(i)];
    }
    rec.maybe_record(t, z, s.y, delta);
    std::vector<double> w_next(static_cast<std::size_t>(n) * d);
    detail::apply_mix(a, s.w, d, w_next);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k)
        w_next[static_cast<std::size_t>(i) * d + k] -= theta * g[static_cast<std::size_t>(i) * d + k];
    s.w.swap(w_next);
    s.y = y_next;
    s.t = t + 1;
    detail::check_finite(s.w, s.t);
    rec.account(delta);
  }
  detail::check_mass(s.y, mass0, opt.steps);
  z = s.ratios();
  std::fill(delta.begin(), delta.end(), 0.0);
  rec.maybe_record(opt.steps, z, s.y, delta);
  return traj;
}

/// Inputs that replay a specialized algorithm inside the unified iteration.
/// Mapped time is stride * t: the unified trajectory at stride * t equals the
/// specialized iterate at t.
struct UnifiedEmbedding {
  MatrixSequence seq;
  StepSchedule schedule;
  std::vector<double> x0;
  long stride = 1;
  long unified_steps = 0;
};

/// Interleaves identity mixes so the descent and the mix of one post-descent
/// step occupy two unified steps: P'(2t) = I with the original step sizes,
/// P'(2t+1) = P(t) with zero steps.
inline UnifiedEmbedding embed_dgd_post(const MatrixSequence& seq, const StepSchedule& schedule,
                                       const std::vector<double>& x0, long steps) {
  const int n = seq.n();
  const auto identity = StochasticMatrix::identity(n, seq.kind());
  MatrixSequence interleaved = [&] {
    if (auto p = seq.declared_period()) {
      std::vector<StochasticMatrix> mats;
      for (long t = 0; t < *p; ++t) {
        mats.push_back(identity);
        mats.push_back(seq.at(t));
      }
      return MatrixSequence::periodic(std::move(mats));
    }
    std::vector<StochasticMatrix> mats;
    for (long t = 0; t < steps; ++t) {
      mats.push_back(identity);
      mats.push_back(seq.at(t));
    }
    return MatrixSequence::explicit_then_hold(std::move(mats));
  }();
  auto base = std::make_shared<StepSchedule>(schedule);
  StepSchedule derived = StepSchedule::derived(n, [base](long t, std::span<double> out) {
    if (t % 2 == 0)
      base->delta_at(t / 2, out);
    else
      std::fill(out.begin(), out.end(), 0.0);
  });
  return UnifiedEmbedding{std::move(interleaved), std::move(derived), x0, 2, 2 * steps};
}

/// Same matrix every step; the schedule table divides the base step by the
/// live diagonal of P^t exactly as the specialized runner does.
inline UnifiedEmbedding embed_row_stochastic(const StochasticMatrix& p, double c, double alpha,
                                             const std::vector<double>& x0, long steps,
                                             bool skip_descent_until_positive = false) {
  const int n = p.n();
  auto table = std::make_shared<std::vector<std::vector<double>>>();
  table->reserve(static_cast<std::size_t>(steps));
  detail::PowerDiagonalTracker tracker(p);
  for (long t = 0; t < steps; ++t) {
    const double base = detail::power_step(c, alpha, t);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      row[static_cast<std::size_t>(i)] =
          detail::scaled_step(base, tracker.diagonal(i), skip_descent_until_positive, t, i);
    table->push_back(std::move(row));
    tracker.advance();
  }
  StepSchedule derived = StepSchedule::derived(n, [table](long t, std::span<double> out) {
    if (t >= static_cast<long>(table->size()))
      throw Error(Errc::config_invalid, "embedded schedule ends at t=" +
                                            std::to_string(table->size() - 1));
    const auto& row = (*table)[static_cast<std::size_t>(t)];
    std::copy(row.begin(), row.end(), out.begin());
  });
  return UnifiedEmbedding{MatrixSequence::constant(p), std::move(derived), x0, 1, steps};
}

namespace detail {

inline std::vector<std::vector<double>> mass_table(const MatrixSequence& a_seq,
                                                   const std::vector<double>& y0, long steps) {
  std::vector<std::vector<double>> ys{y0};
  for (long t = 0; t < steps; ++t) {
    ys.push_back(apply_matrix_vector(a_seq.at(t), ys.back()));
    for (double v : ys.back())
      if (!(v > 0.0)) throw Error(Errc::nonpositive_mass, "mass vanished at t=" + std::to_string(t + 1));
  }
  return ys;
}

inline std::vector<double> ratio_block(const std::vector<double>& w, const std::vector<double>& y,
                                       int n, int d) {
  std::vector<double> z(w.size());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      z[static_cast<std::size_t>(i) * d + k] =
          w[static_cast<std::size_t>(i) * d + k] / y[static_cast<std::size_t>(i)];
  return z;
}

}  // namespace detail

/// Mix-and-descend on (w, y) becomes the unified iteration on the ratios with
/// the induced row-stochastic factors and steps theta_i(t) / y_i(t+1).
inline UnifiedEmbedding embed_push_first(const MatrixSequence& a_seq, double c, double alpha,
                                         const std::vector<double>& w0,
                                         const std::vector<double>& y0, long steps, int d) {
  const int n = a_seq.n();
  const auto ys = detail::mass_table(a_seq, y0, steps);
  std::vector<StochasticMatrix> induced;
  induced.reserve(static_cast<std::size_t>(steps));
  for (long t = 0; t < steps; ++t)
    induced.push_back(induced_row_stochastic(a_seq.at(t), ys[static_cast<std::size_t>(t)],
                                             ys[static_cast<std::size_t>(t) + 1]));
  auto table = std::make_shared<std::vector<std::vector<double>>>();
  table->reserve(static_cast<std::size_t>(steps));
  for (long t = 0; t < steps; ++t) {
    const double theta = detail::power_step(c, alpha, t);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      row[static_cast<std::size_t>(i)] = theta / ys[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(i)];
    table->push_back(std::move(row));
  }
  StepSchedule derived = StepSchedule::derived(n, [table](long t, std::span<double> out) {
    if (t >= static_cast<long>(table->size()))
      throw Error(Errc::config_invalid, "embedded schedule ends at t=" +
                                            std::to_string(table->size() - 1));
    const auto& row = (*table)[static_cast<std::size_t>(t)];
    std::copy(row.begin(), row.end(), out.begin());
  });
  return UnifiedEmbedding{MatrixSequence::explicit_then_hold(std::move(induced)),
                          std::move(derived), detail::ratio_block(w0, y0, n, d), 1, steps};
}

/// Descend-then-mix on (w, y) splits each stage into a pure descent at even
/// unified times (steps theta_i(t) / y_i(t), identity mix) and a pure induced
/// mix at odd times.
inline UnifiedEmbedding embed_subgradient_push(const MatrixSequence& a_seq, double c, double alpha,
                                               const std::vector<double>& w0,
                                               const std::vector<double>& y0, long steps, int d) {
  const int n = a_seq.n();
  const auto ys = detail::mass_table(a_seq, y0, steps);
  const auto identity = StochasticMatrix::identity(n, Stochasticity::row);
  std::vector<StochasticMatrix> mats;
  mats.reserve(static_cast<std::size_t>(2 * steps));
  for (long t = 0; t < steps; ++t) {
    mats.push_back(identity);
    mats.push_back(induced_row_stochastic(a_seq.at(t), ys[static_cast<std::size_t>(t)],
                                          ys[static_cast<std::size_t>(t) + 1]));
  }
  auto table = std::make_shared<std::vector<std::vector<double>>>();
  table->reserve(static_cast<std::size_t>(steps));
  for (long t = 0; t < steps; ++t) {
    const double theta = detail::power_step(c, alpha, t);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      row[static_cast<std::size_t>(i)] = theta / ys[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    table->push_back(std::move(row));
  }
  StepSchedule derived = StepSchedule::derived(n, [table](long t, std::span<double> out) {
    if (t % 2 != 0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    if (t / 2 >= static_cast<long>(table->size()))
      throw Error(Errc::config_invalid, "embedded schedule ends at t=" +
                                            std::to_string(2 * table->size() - 2));
    const auto& row = (*table)[static_cast<std::size_t>(t / 2)];
    std::copy(row.begin(), row.end(), out.begin());
  });
  return UnifiedEmbedding{MatrixSequence::explicit_then_hold(std::move(mats)), std::move(derived),
                          detail::ratio_block(w0, y0, n, d), 2, 2 * steps};
}

struct EmbeddingReport {
  std::string algorithm;
  long steps = 0;
  double tol = 0.0;
  double max_rel_deviation = 0.0;
  bool pass = false;
};

namespace detail {

inline EmbeddingReport compare_trajectories(const std::string& algorithm,
                                            const Trajectory& specialized,
                                            const Trajectory& unified, long stride, long steps,
                                            double tol) {
  EmbeddingReport rep{algorithm, steps, tol, 0.0, false};
  std::size_t ui = 0;
  for (const auto& snap : specialized.snapshots) {
    const long target = stride * snap.t;
    while (ui < unified.snapshots.size() && unified.snapshots[ui].t < target) ++ui;
    if (ui >= unified.snapshots.size() || unified.snapshots[ui].t != target)
      throw Error(Errc::embedding_unavailable,
                  "unified trajectory is missing mapped time " + std::to_string(target));
    const auto& a = snap.state;
    const auto& b = unified.snapshots[ui].state;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double scale = std::max({1.0, std::abs(a[k]), std::abs(b[k])});
      rep.max_rel_deviation = std::max(rep.max_rel_deviation, std::abs(a[k] - b[k]) / scale);
    }
  }
  rep.pass = rep.max_rel_deviation <= tol;
  return rep;
}

}  // namespace detail

/// Runs the specialized algorithm and its unified replay side by side and
/// reports the worst relative state deviation across all mapped times.
inline EmbeddingReport verify_embedding_dgd_post(const ConvexProblem& problem,
                                                 const MatrixSequence& seq,
                                                 const StepSchedule& schedule,
                                                 const std::vector<double>& x0, long steps,
                                                 double tol = 1e-10) {
  RunOptions every{steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto spec_traj = run_dgd_post(problem, seq, schedule, x0, every);
  const auto emb = embed_dgd_post(seq, schedule, x0, steps);
  RunOptions uevery{emb.unified_steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto uni_traj = run_unified(problem, emb.seq, emb.schedule, emb.x0, uevery);
  return detail::compare_trajectories("dgd_post", spec_traj, uni_traj, emb.stride, steps, tol);
}

inline EmbeddingReport verify_embedding_row_stochastic(const ConvexProblem& problem,
                                                       const StochasticMatrix& p, double c,
                                                       double alpha, const std::vector<double>& x0,
                                                       long steps, double tol = 1e-10,
                                                       bool skip_descent_until_positive = false) {
  RunOptions every{steps, {SnapshotPlan::Kind::every, 1, {}}, skip_descent_until_positive};
  const auto spec_traj = run_row_stochastic(problem, p, c, alpha, x0, every);
  const auto emb = embed_row_stochastic(p, c, alpha, x0, steps, skip_descent_until_positive);
  RunOptions uevery{emb.unified_steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto uni_traj = run_unified(problem, emb.seq, emb.schedule, emb.x0, uevery);
  return detail::compare_trajectories("row_stochastic", spec_traj, uni_traj, emb.stride, steps, tol);
}

inline EmbeddingReport verify_embedding_subgradient_push(const ConvexProblem& problem,
                                                         const MatrixSequence& a_seq, double c,
                                                         double alpha,
                                                         const std::vector<double>& w0,
                                                         const std::vector<double>& y0, long steps,
                                                         double tol = 1e-10) {
  RunOptions every{steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto spec_traj = run_subgradient_push(problem, a_seq, c, alpha, w0, y0, every);
  const auto emb = embed_subgradient_push(a_seq, c, alpha, w0, y0, steps, problem.dim());
  RunOptions uevery{emb.unified_steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto uni_traj = run_unified(problem, emb.seq, emb.schedule, emb.x0, uevery);
  return detail::compare_trajectories("subgradient_push", spec_traj, uni_traj, emb.stride, steps,
                                      tol);
}

inline EmbeddingReport verify_embedding_push_first(const ConvexProblem& problem,
                                                   const MatrixSequence& a_seq, double c,
                                                   double alpha, const std::vector<double>& w0,
                                                   const std::vector<double>& y0, long steps,
                                                   double tol = 1e-10) {
  RunOptions every{steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto spec_traj = run_push_first(problem, a_seq, c, alpha, w0, y0, every);
  const auto emb = embed_push_first(a_seq, c, alpha, w0, y0, steps, problem.dim());
  RunOptions uevery{emb.unified_steps, {SnapshotPlan::Kind::every, 1, {}}, false};
  const auto uni_traj = run_unified(problem, emb.seq, emb.schedule, emb.x0, uevery);
  return detail::compare_trajectories("push_first", spec_traj, uni_traj, emb.stride, steps, tol);
}

}  // namespace subgrad
