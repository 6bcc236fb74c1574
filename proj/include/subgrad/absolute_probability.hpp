#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subgrad/graph_conditions.hpp"
#include "subgrad/io.hpp"
#include "subgrad/matrix_sequence.hpp"
#include "subgrad/stochastic_matrix.hpp"

namespace subgrad {

enum class AbsProbMethod { backward_limit, perron_power, uniform_doubly, pushsum_mass };

inline const char* to_string(AbsProbMethod m) {
  switch (m) {
    case AbsProbMethod::backward_limit: return "backward_limit";
    case AbsProbMethod::perron_power: return "perron_power";
    case AbsProbMethod::uniform_doubly: return "uniform_doubly";
    case AbsProbMethod::pushsum_mass: return "pushsum_mass";
  }
  return "unknown";
}

/// Sequence pi(0), pi(1), ... of probability vectors satisfying
/// pi(t+1)^T P(t) = pi(t)^T, materialized for t in [0, horizon + 1] so that
/// consumers needing pi(t+1) at t = horizon stay in range. For sequences whose
/// vector is time-invariant the storage collapses to a single vector valid for
/// every t.
class AbsProbSequence {
 public:
  AbsProbSequence(int n, long horizon, AbsProbMethod method, std::vector<double> single)
      : n_(n), horizon_(horizon), method_(method), constant_(true), single_(std::move(single)) {}

  AbsProbSequence(int n, long horizon, AbsProbMethod method,
                  std::vector<std::vector<double>> vectors, std::vector<double> residuals)
      : n_(n),
        horizon_(horizon),
        method_(method),
        constant_(false),
        vectors_(std::move(vectors)),
        residuals_(std::move(residuals)) {}

  int n() const { return n_; }
  long horizon() const { return horizon_; }
  AbsProbMethod method() const { return method_; }
  bool time_invariant() const { return constant_; }

  const std::vector<double>& at(long t) const {
    if (t < 0) throw Error(Errc::time_order, "negative time");
    if (constant_) return single_;
    if (t > horizon_ + 1)
      throw Error(Errc::horizon_exceeded, "t=" + std::to_string(t) + " beyond horizon " +
                                              std::to_string(horizon_));
    return vectors_[static_cast<std::size_t>(t)];
  }

  /// Stationarity defect ||pi(t+1)^T P(t) - pi(t)^T||_1 recorded at build time.
  double residual(long t) const {
    if (constant_) return residual_constant_;
    if (t < 0 || t > horizon_) throw Error(Errc::horizon_exceeded, "no residual at t=" + std::to_string(t));
    return residuals_[static_cast<std::size_t>(t)];
  }

  void set_constant_residual(double r) { residual_constant_ = r; }

  /// CSV rows: t, pi_0, ..., pi_{n-1}, residual.
  std::string to_csv(const std::string& preamble = {}) const {
    std::ostringstream out;
    if (!preamble.empty()) out << preamble;
    out << "t";
    for (int i = 0; i < n_; ++i) out << ",pi_" << i;
    out << ",residual\n";
    for (long t = 0; t <= horizon_; ++t) {
      out << t;
      for (double v : at(t)) out << ',' << format_double(v);
      out << ',' << format_double(residual(t)) << '\n';
    }
    return out.str();
  }

 private:
  int n_;
  long horizon_;
  AbsProbMethod method_;
  bool constant_;
  std::vector<double> single_;
  std::vector<std::vector<double>> vectors_;
  std::vector<double> residuals_;
  double residual_constant_ = 0.0;
};

namespace detail {

inline double stationarity_residual(const std::vector<double>& pi_next,
                                    const StochasticMatrix& p, const std::vector<double>& pi) {
  const int n = p.n();
  double r = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += pi_next[static_cast<std::size_t>(i)] * p(i, j);
    r += std::abs(s - pi[static_cast<std::size_t>(j)]);
  }
  return r;
}

// Left Perron vector of a primitive row-stochastic matrix by power iteration
// on the transpose, normalized to sum 1.
inline std::vector<double> perron_left_vector(const StochasticMatrix& p, double tol = 1e-12,
                                              long max_iters = 100000) {
  const int n = p.n();
  std::vector<double> v(static_cast<std::size_t>(n), 1.0 / n), next(static_cast<std::size_t>(n));
  for (long it = 0; it < max_iters; ++it) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += v[static_cast<std::size_t>(i)] * p(i, j);
      next[static_cast<std::size_t>(j)] = s;
    }
    const double mass = std::accumulate(next.begin(), next.end(), 0.0);
    for (double& x : next) x /= mass;
    double diff = 0.0;
    for (int j = 0; j < n; ++j) diff += std::abs(next[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(j)]);
    v.swap(next);
    if (diff <= tol) return v;
  }
  throw Error(Errc::no_convergence, "power iteration did not reach tolerance");
}

}  // namespace detail

/// Absolute probability vectors of a row-stochastic sequence satisfying the
/// product-positivity condition. For each t the backward products P(s, t) are
/// accumulated until their ergodicity coefficient falls below `tau_tol`; all
/// rows then agree to that tolerance and their average is pi(t). Constant
/// sequences take a Perron power-iteration fast path (uniform for doubly
/// stochastic input).
inline AbsProbSequence compute_abs_prob(const MatrixSequence& seq, long horizon,
                                        const ConditionReport& a1, double tau_tol = 1e-10) {
  if (seq.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "expects a row-stochastic sequence");
  if (horizon < 0) throw Error(Errc::time_order, "negative horizon");
  if (!a1.holds)
    throw Error(Errc::precondition_a1,
                "product-positivity condition not established: " + a1.failure_reason);
  const int n = seq.n();
  const long witness = a1.witness_T.value_or(n * n);
  const long max_factors = 100 * std::max<long>(witness, 1);

  const auto check_lower_bound = [&](const AbsProbSequence& s) {
    if (!a1.p_plus || !a1.witness_T) return;
    const double bound = std::pow(*a1.p_plus, static_cast<double>(*a1.witness_T)) - 1e-10;
    for (long t = 0; t <= (s.time_invariant() ? 0 : horizon + 1); ++t)
      for (double v : s.at(t))
        if (v < bound)
          throw Error(Errc::no_convergence, "computed vector violates the entry lower bound");
  };

  if (seq.kind() == Stochasticity::doubly) {
    std::vector<double> uni(static_cast<std::size_t>(n), 1.0 / n);
    AbsProbSequence out(n, horizon, AbsProbMethod::uniform_doubly, std::move(uni));
    out.set_constant_residual(detail::stationarity_residual(out.at(0), seq.at(0), out.at(0)));
    check_lower_bound(out);
    return out;
  }
  if (seq.rule() == MatrixSequence::Rule::constant) {
    auto pi = detail::perron_left_vector(seq.at(0));
    AbsProbSequence out(n, horizon, AbsProbMethod::perron_power, std::move(pi));
    out.set_constant_residual(detail::stationarity_residual(out.at(0), seq.at(0), out.at(0)));
    check_lower_bound(out);
    return out;
  }

  std::vector<std::vector<double>> vectors;
  vectors.reserve(static_cast<std::size_t>(horizon) + 2);
  for (long t = 0; t <= horizon + 1; ++t) {
    StochasticMatrix acc = StochasticMatrix::identity(n);
    long k = 0;
    while (ergodicity_coefficient(acc) >= tau_tol) {
      if (k >= max_factors)
        throw Error(Errc::no_convergence,
                    "ergodicity coefficient above " + format_double(tau_tol) + " after " +
                        std::to_string(max_factors) + " factors at t=" + std::to_string(t));
      acc = multiply(seq.at(t + k), acc);
      ++k;
    }
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += acc(i, j);
      pi[static_cast<std::size_t>(j)] = s / n;
    }
    vectors.push_back(std::move(pi));
  }
  std::vector<double> residuals(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (long t = 0; t <= horizon; ++t)
    residuals[static_cast<std::size_t>(t)] = detail::stationarity_residual(
        vectors[static_cast<std::size_t>(t) + 1], seq.at(t), vectors[static_cast<std::size_t>(t)]);
  AbsProbSequence out(n, horizon, AbsProbMethod::backward_limit, std::move(vectors),
                      std::move(residuals));
  check_lower_bound(out);
  return out;
}

/// Mass-ratio fast path for column-stochastic sequences: iterates
/// y(t+1) = A(t) y(t) and returns pi(t) = y(t) / (1^T y(0)). Stationarity
/// residuals are measured against the induced row-stochastic factors.
inline AbsProbSequence pushsum_abs_prob(const MatrixSequence& a_seq, std::vector<double> y0,
                                        long horizon) {
  if (a_seq.kind() != Stochasticity::column && a_seq.kind() != Stochasticity::doubly)
    throw Error(Errc::kind_mismatch, "expects a column-stochastic sequence");
  const int n = a_seq.n();
  if (static_cast<int>(y0.size()) != n) throw Error(Errc::dimension_mismatch, "y0 size");
  for (double y : y0)
    if (!(y > 0.0)) throw Error(Errc::nonpositive_mass, "initial mass must be strictly positive");
  const double mass = std::accumulate(y0.begin(), y0.end(), 0.0);

  std::vector<std::vector<double>> ys{y0};
  for (long t = 0; t <= horizon; ++t) {
    const auto a = a_seq.at(t);
    const auto& y = ys.back();
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(i, j) * y[static_cast<std::size_t>(j)];
      if (!(s > 0.0))
        throw Error(Errc::nonpositive_mass,
                    "mass " + std::to_string(i) + " vanished at t=" + std::to_string(t + 1));
      next[static_cast<std::size_t>(i)] = s;
    }
    ys.push_back(std::move(next));
  }
  std::vector<std::vector<double>> vectors(ys.size());
  for (std::size_t t = 0; t < ys.size(); ++t) {
    vectors[t].resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) vectors[t][static_cast<std::size_t>(i)] = ys[t][static_cast<std::size_t>(i)] / mass;
  }
  std::vector<double> residuals(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (long t = 0; t <= horizon; ++t) {
    const auto a = a_seq.at(t);
    const int nn = n;
    double r = 0.0;
    // pi(t+1)^T P(t) with P(t) = diag(y(t+1))^-1 A(t) diag(y(t)) collapses to
    // sum_i a_ij y_j / mass, compared against pi_j(t).
    for (int j = 0; j < nn; ++j) {
      double s = 0.0;
      for (int i = 0; i < nn; ++i)
        s += vectors[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(i)] *
             (a(i, j) * ys[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] /
              ys[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(i)]);
      r += std::abs(s - vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
    }
    residuals[static_cast<std::size_t>(t)] = r;
  }
  return AbsProbSequence(n, horizon, AbsProbMethod::pushsum_mass, std::move(vectors),
                         std::move(residuals));
}

/// Row-stochastic matrix diag(y_next)^-1 A diag(y_now) induced by one
/// column-stochastic mixing step. `y_next` must equal A y_now entrywise within
/// `mass_tol`; masses must be strictly positive. The quotient construction
/// accumulates roundoff, so validation uses the product tolerance.
inline StochasticMatrix induced_row_stochastic(const StochasticMatrix& a,
                                               const std::vector<double>& y_now,
                                               const std::vector<double>& y_next,
                                               double mass_tol = 1e-12) {
  if (a.kind() != Stochasticity::column && a.kind() != Stochasticity::doubly)
    throw Error(Errc::kind_mismatch, "expects a column-stochastic matrix");
  const int n = a.n();
  if (static_cast<int>(y_now.size()) != n || static_cast<int>(y_next.size()) != n)
    throw Error(Errc::dimension_mismatch, "mass vector size");
  for (int i = 0; i < n; ++i)
    if (!(y_now[static_cast<std::size_t>(i)] > 0.0) || !(y_next[static_cast<std::size_t>(i)] > 0.0))
      throw Error(Errc::nonpositive_mass, "masses must be strictly positive");
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += a(i, j) * y_now[static_cast<std::size_t>(j)];
    if (std::abs(s - y_next[static_cast<std::size_t>(i)]) > mass_tol)
      throw Error(Errc::mass_mismatch, "y_next[" + std::to_string(i) + "] deviates from A y_now by " +
                                           format_double(s - y_next[static_cast<std::size_t>(i)]));
  }
  std::vector<double> rows(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rows[static_cast<std::size_t>(i) * n + j] =
          a(i, j) * y_now[static_cast<std::size_t>(j)] / y_next[static_cast<std::size_t>(i)];
  return StochasticMatrix(n, std::move(rows), Stochasticity::row, 1e-10);
}

}  // namespace subgrad
