#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "subgrad/error.hpp"
#include "subgrad/random.hpp"
#include "subgrad/stochastic_matrix.hpp"

namespace subgrad {

/// Parameters of the seeded random family. Every generated matrix gets edge
/// weights uniform in [min_weight, 1] on the sampled support, then the rows
/// (or columns) are divided by their sums at generation time, so positive
/// entries stay bounded below by min_weight / n across the whole sequence.
struct RandomMatrixFamily {
  int n = 0;
  Stochasticity kind = Stochasticity::row;
  double density = 1.0;             // inclusion probability of each off-diagonal entry
  bool positive_diagonal = true;
  bool no_zero_rows = false;        // meaningful for column kind, where rows may vanish
  double min_weight = 0.1;
};

/// One random matrix from the family; `rng` supplies all randomness.
inline StochasticMatrix random_stochastic(const RandomMatrixFamily& fam, std::mt19937_64& rng) {
  const int n = fam.n;
  if (n <= 0) throw Error(Errc::dimension_mismatch, "family with n <= 0");
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool keep = (i == j) ? fam.positive_diagonal : uniform01(rng) < fam.density;
      if (keep) at(i, j) = fam.min_weight + (1.0 - fam.min_weight) * uniform01(rng);
    }
  const bool column = fam.kind == Stochasticity::column;
  // A stochastic matrix cannot have an empty row (column); repair the support
  // before weights are final, never after.
  for (int i = 0; i < n; ++i) {
    bool empty = true;
    for (int j = 0; j < n && empty; ++j)
      if ((column ? at(j, i) : at(i, j)) > 0.0) empty = false;
    if (empty) {
      double& slot = column ? at(static_cast<int>(rng() % n), i) : at(i, static_cast<int>(rng() % n));
      slot = fam.min_weight + (1.0 - fam.min_weight) * uniform01(rng);
    }
  }
  if (column && fam.no_zero_rows)
    for (int i = 0; i < n; ++i) {
      bool empty = true;
      for (int j = 0; j < n && empty; ++j)
        if (at(i, j) > 0.0) empty = false;
      if (empty) at(i, static_cast<int>(rng() % n)) = fam.min_weight + (1.0 - fam.min_weight) * uniform01(rng);
    }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += column ? at(j, i) : at(i, j);
    for (int j = 0; j < n; ++j) (column ? at(j, i) : at(i, j)) /= s;
  }
  return StochasticMatrix(n, std::move(a), fam.kind);
}

/// Time-indexed family P(0), P(1), ... of stochastic matrices of one shared
/// size and kind. Rules: constant, periodic, explicit list that holds its last
/// element forever, and a seeded random family (stateless in t, so the same
/// seed always reproduces the same sequence regardless of evaluation order).
class MatrixSequence {
 public:
  enum class Rule { constant, periodic, explicit_hold, seeded_random };

  static MatrixSequence constant(StochasticMatrix p) {
    return MatrixSequence(Rule::constant, {std::move(p)}, {}, 0);
  }

  static MatrixSequence periodic(std::vector<StochasticMatrix> ps) {
    if (ps.empty()) throw Error(Errc::empty_sequence, "periodic rule with no matrices");
    return MatrixSequence(Rule::periodic, std::move(ps), {}, 0);
  }

  static MatrixSequence explicit_then_hold(std::vector<StochasticMatrix> ps) {
    if (ps.empty()) throw Error(Errc::empty_sequence, "explicit rule with no matrices");
    return MatrixSequence(Rule::explicit_hold, std::move(ps), {}, 0);
  }

  static MatrixSequence seeded_random(RandomMatrixFamily fam, std::uint64_t seed) {
    if (fam.n <= 0) throw Error(Errc::dimension_mismatch, "family with n <= 0");
    return MatrixSequence(Rule::seeded_random, {}, fam, seed);
  }

  StochasticMatrix at(long t) const {
    if (t < 0) throw Error(Errc::time_order, "negative time " + std::to_string(t));
    switch (rule_) {
      case Rule::constant:
        return mats_[0];
      case Rule::periodic:
        return mats_[static_cast<std::size_t>(t % static_cast<long>(mats_.size()))];
      case Rule::explicit_hold:
        return mats_[static_cast<std::size_t>(
            std::min<long>(t, static_cast<long>(mats_.size()) - 1))];
      case Rule::seeded_random: {
        auto rng = seeded_engine(seed_, static_cast<std::uint64_t>(t));
        return random_stochastic(family_, rng);
      }
    }
    throw Error(Errc::empty_sequence, "corrupt sequence rule");
  }

  int n() const { return rule_ == Rule::seeded_random ? family_.n : mats_[0].n(); }

  Stochasticity kind() const {
    return rule_ == Rule::seeded_random ? family_.kind : mats_[0].kind();
  }

  Rule rule() const { return rule_; }

  /// Shortest horizon after which the sequence provably repeats (1 for
  /// constant, the list length for periodic); nullopt when there is none.
  std::optional<long> declared_period() const {
    if (rule_ == Rule::constant) return 1;
    if (rule_ == Rule::periodic) return static_cast<long>(mats_.size());
    return std::nullopt;
  }

  /// Length of the explicit prefix before the hold-last tail.
  long prefix_length() const {
    return rule_ == Rule::explicit_hold ? static_cast<long>(mats_.size()) : 0;
  }

 private:
  MatrixSequence(Rule rule, std::vector<StochasticMatrix> mats, RandomMatrixFamily fam,
                 std::uint64_t seed)
      : rule_(rule), mats_(std::move(mats)), family_(fam), seed_(seed) {
    for (std::size_t i = 1; i < mats_.size(); ++i)
      if (mats_[i].n() != mats_[0].n() || mats_[i].kind() != mats_[0].kind())
        throw Error(Errc::dimension_mismatch, "sequence mixes matrix sizes or kinds");
  }

  Rule rule_;
  std::vector<StochasticMatrix> mats_;
  RandomMatrixFamily family_;
  std::uint64_t seed_ = 0;
};

/// P(t, t0) = P(t-1) P(t-2) ... P(t0), with P(t0, t0) = I.
struct BackwardProduct {
  long from = 0;  // t0
  long to = 0;    // t
  StochasticMatrix matrix;
};

inline BackwardProduct backward_product(const MatrixSequence& seq, long t0, long t,
                                        double tolerance = 1e-10) {
  if (t < t0) throw Error(Errc::time_order, "t=" + std::to_string(t) + " before t0=" + std::to_string(t0));
  if (seq.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "backward products are defined over row-stochastic factors");
  StochasticMatrix acc = StochasticMatrix::identity(seq.n());
  for (long s = t0; s < t; ++s) acc = multiply(seq.at(s), acc, tolerance);
  return BackwardProduct{t0, t, std::move(acc)};
}

/// Smallest strictly positive entry over P(t) for t in [0, t_probe].
inline double min_positive_entry(const MatrixSequence& seq, long t_probe) {
  if (t_probe < 0) throw Error(Errc::time_order, "negative probe window");
  double m = std::numeric_limits<double>::infinity();
  for (long t = 0; t <= t_probe; ++t) m = std::min(m, seq.at(t).min_positive_entry());
  return m;
}

}  // namespace subgrad
