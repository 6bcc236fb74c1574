#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "subgrad/error.hpp"

namespace subgrad {

enum class Stochasticity { row, column, doubly };

inline const char* to_string(Stochasticity k) {
  switch (k) {
    case Stochasticity::row: return "row";
    case Stochasticity::column: return "column";
    case Stochasticity::doubly: return "doubly";
  }
  return "unknown";
}

inline Stochasticity stochasticity_from_string(const std::string& s) {
  if (s == "row") return Stochasticity::row;
  if (s == "column") return Stochasticity::column;
  if (s == "doubly") return Stochasticity::doubly;
  throw Error(Errc::config_invalid, "unknown stochasticity kind '" + s + "'");
}

inline bool satisfies(Stochasticity have, Stochasticity want) {
  return have == want || have == Stochasticity::doubly;
}

/// Square nonnegative matrix whose row sums (kind row), column sums (kind
/// column), or both (kind doubly) equal 1 within the construction tolerance.
/// Entries are stored row-major. Construction validates and never repairs:
/// a matrix that misses the tolerance is rejected, not renormalized.
class StochasticMatrix {
 public:
  static constexpr double kDefaultTolerance = 1e-12;

  StochasticMatrix(int n, std::vector<double> entries, Stochasticity kind,
                   double tolerance = kDefaultTolerance)
      : n_(n), kind_(kind), a_(std::move(entries)) {
    if (n_ <= 0 || a_.size() != static_cast<std::size_t>(n_) * n_)
      throw Error(Errc::dimension_mismatch, "expected " + std::to_string(n_) + "x" +
                                                std::to_string(n_) + " entries");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const double e = a_[static_cast<std::size_t>(i) * n_ + j];
        if (!(e >= 0.0))
          throw Error(Errc::negative_entry, "entry (" + std::to_string(i) + "," +
                                                std::to_string(j) + ") = " + std::to_string(e));
      }
    if (kind_ != Stochasticity::column) check_sums(/*rows=*/true, tolerance);
    if (kind_ != Stochasticity::row) check_sums(/*rows=*/false, tolerance);
  }

  int n() const { return n_; }
  Stochasticity kind() const { return kind_; }

  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  std::span<const double> row(int i) const {
    return {a_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
  }

  std::span<const double> data() const { return {a_.data(), a_.size()}; }

  bool strictly_positive() const {
    return std::all_of(a_.begin(), a_.end(), [](double e) { return e > 0.0; });
  }

  bool positive_diagonal() const {
    for (int i = 0; i < n_; ++i)
      if (!((*this)(i, i) > 0.0)) return false;
    return true;
  }

  /// Smallest strictly positive entry.
  double min_positive_entry() const {
    double m = std::numeric_limits<double>::infinity();
    for (double e : a_)
      if (e > 0.0) m = std::min(m, e);
    return m;
  }

  static StochasticMatrix identity(int n, Stochasticity kind = Stochasticity::doubly) {
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0;
    return StochasticMatrix(n, std::move(a), kind);
  }

 private:
  void check_sums(bool rows, double tolerance) const {
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += rows ? (*this)(i, j) : (*this)(j, i);
      if (std::abs(s - 1.0) > tolerance) {
        const Errc code = rows ? Errc::row_sum_violation : Errc::column_sum_violation;
        throw Error(code, std::string(rows ? "row " : "column ") + std::to_string(i) + " sums to " +
                              std::to_string(s) + " (deviation " + std::to_string(s - 1.0) + ")");
      }
    }
  }

  int n_;
  Stochasticity kind_;
  std::vector<double> a_;
};

/// Validating constructor spelled as a named operation.
inline StochasticMatrix validate(int n, std::vector<double> entries, Stochasticity kind,
                                 double tolerance = StochasticMatrix::kDefaultTolerance) {
  return StochasticMatrix(n, std::move(entries), kind, tolerance);
}

inline StochasticMatrix validate(const std::vector<std::vector<double>>& rows, Stochasticity kind,
                                 double tolerance = StochasticMatrix::kDefaultTolerance) {
  const int n = static_cast<int>(rows.size());
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * n);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != n)
      throw Error(Errc::dimension_mismatch, "ragged row of length " + std::to_string(r.size()));
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return StochasticMatrix(n, std::move(flat), kind, tolerance);
}

/// Nonnegative vector summing to 1 within tolerance.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> entries, double tolerance = 1e-12)
      : p_(std::move(entries)) {
    if (p_.empty()) throw Error(Errc::dimension_mismatch, "empty probability vector");
    double s = 0.0;
    for (double e : p_) {
      if (!(e >= 0.0)) throw Error(Errc::negative_entry, "entry " + std::to_string(e));
      s += e;
    }
    if (std::abs(s - 1.0) > tolerance)
      throw Error(Errc::row_sum_violation, "entries sum to " + std::to_string(s));
  }

  int n() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_[i]; }
  const std::vector<double>& entries() const { return p_; }

 private:
  std::vector<double> p_;
};

namespace detail {

// C = A * B with row-major accumulation; the loop order is part of the
// reproducibility contract.
inline std::vector<double> multiply_raw(int n, std::span<const double> a, std::span<const double> b) {
  std::vector<double> c(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += a[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k) * n + j];
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  return c;
}

inline Stochasticity combine_kinds(Stochasticity x, Stochasticity y) {
  if (x == y) return x;
  if (x == Stochasticity::doubly) return y;
  if (y == Stochasticity::doubly) return x;
  throw Error(Errc::kind_mismatch, "cannot multiply row- and column-stochastic factors");
}

}  // namespace detail

/// Product of stochastic matrices of compatible kind. Products accumulate
/// roundoff, so they are re-validated at a looser tolerance than fresh input.
inline StochasticMatrix multiply(const StochasticMatrix& a, const StochasticMatrix& b,
                                 double tolerance = 1e-10) {
  if (a.n() != b.n())
    throw Error(Errc::dimension_mismatch,
                std::to_string(a.n()) + " vs " + std::to_string(b.n()));
  return StochasticMatrix(a.n(), detail::multiply_raw(a.n(), a.data(), b.data()),
                          detail::combine_kinds(a.kind(), b.kind()), tolerance);
}

/// Dobrushin ergodicity coefficient
///   tau(P) = (1/2) max_{i1,i2} sum_j |p_{i1,j} - p_{i2,j}|,
/// the maximum total-variation distance between two rows. 0 iff all rows are
/// identical, 1 iff two rows have disjoint support.
inline double ergodicity_coefficient(const StochasticMatrix& p) {
  if (p.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "ergodicity coefficient is defined for row-stochastic input");
  double worst = 0.0;
  for (int i1 = 0; i1 < p.n(); ++i1)
    for (int i2 = i1 + 1; i2 < p.n(); ++i2) {
      double s = 0.0;
      for (int j = 0; j < p.n(); ++j) s += std::abs(p(i1, j) - p(i2, j));
      worst = std::max(worst, 0.5 * s);
    }
  return worst;
}

/// Checks tau(P1*P2) <= tau(P1)*tau(P2) + slack.
inline bool tau_of_product_bound_check(const StochasticMatrix& p1, const StochasticMatrix& p2,
                                       double slack = 1e-12) {
  if (p1.n() != p2.n())
    throw Error(Errc::dimension_mismatch,
                std::to_string(p1.n()) + " vs " + std::to_string(p2.n()));
  const double lhs = ergodicity_coefficient(multiply(p1, p2));
  const double rhs = ergodicity_coefficient(p1) * ergodicity_coefficient(p2);
  return lhs <= rhs + slack;
}

inline void to_json(nlohmann::json& j, const StochasticMatrix& m) {
  std::vector<std::vector<double>> rows(m.n());
  for (int i = 0; i < m.n(); ++i) rows[i].assign(m.row(i).begin(), m.row(i).end());
  j = nlohmann::json{{"n", m.n()}, {"kind", to_string(m.kind())}, {"rows", rows}};
}

inline StochasticMatrix matrix_from_json(const nlohmann::json& j) {
  for (const auto& item : j.items())
    if (item.key() != "n" && item.key() != "kind" && item.key() != "rows")
      throw Error(Errc::config_invalid, "unknown matrix key '" + item.key() + "'");
  const int n = j.at("n").get<int>();
  const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(rows.size()) != n)
    throw Error(Errc::dimension_mismatch, "matrix declares n=" + std::to_string(n) + " but has " +
                                              std::to_string(rows.size()) + " rows");
  return validate(rows, stochasticity_from_string(j.at("kind").get<std::string>()));
}

}  // namespace subgrad
