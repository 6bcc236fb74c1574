#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "subgrad/error.hpp"
#include "subgrad/random.hpp"

namespace subgrad {

/// A sum f = sum_i f_i of convex agent costs with bounded subgradients.
/// Subgradient selection must be deterministic: the same x always yields the
/// same element of the subdifferential.
class ConvexProblem {
 public:
  virtual ~ConvexProblem() = default;

  virtual int agents() const = 0;
  virtual int dim() const = 0;
  virtual double cost(int agent, std::span<const double> x) const = 0;
  virtual void subgradient(int agent, std::span<const double> x, std::span<double> g) const = 0;

  /// L_i = sup_x ||g_i(x)||_1.
  virtual double subgradient_bound(int agent) const = 0;

  double global_cost(std::span<const double> x) const {
    double s = 0.0;
    for (int i = 0; i < agents(); ++i) s += cost(i, x);
    return s;
  }

  /// A point attaining the minimum of the global cost.
  virtual std::vector<double> minimizer() const {
    return pattern_search_minimizer(std::vector<double>(static_cast<std::size_t>(dim()), 0.0));
  }

  /// Distance (max-norm) from x to the set of global minimizers. The default
  /// treats the minimizer as unique.
  virtual double distance_to_argmin(std::span<const double> x) const {
    const auto star = minimizer();
    double d = 0.0;
    for (int k = 0; k < dim(); ++k)
      d = std::max(d, std::abs(x[static_cast<std::size_t>(k)] - star[static_cast<std::size_t>(k)]));
    return d;
  }

 protected:
  /// Coordinate pattern search on the global cost: walk along +-h e_k moves,
  /// halving h whenever no move improves, until h < 1e-4 and every sampled
  /// neighbor costs at least cost(x*) - 1e-12.
  std::vector<double> pattern_search_minimizer(std::vector<double> x) const {
    const int d = dim();
    double h = 1.0;
    double fx = global_cost(x);
    std::vector<double> trial = x;
    while (true) {
      bool improved = false;
      for (int k = 0; k < d; ++k) {
        for (double sign : {1.0, -1.0}) {
          trial = x;
          trial[static_cast<std::size_t>(k)] += sign * h;
          const double ft = global_cost(trial);
          if (ft < fx - 1e-12) {
            x = trial;
            fx = ft;
            improved = true;
          }
        }
      }
      if (!improved) {
        if (h < 1e-4) break;
        h *= 0.5;
      }
    }
    return x;
  }
};

/// f_i(x) = ||x - c_i||_1 with anchor rows c_i. The global argmin is the
/// coordinate-wise median box [lo_k, hi_k] spanned by the middle order
/// statistics; at a kink the subgradient component is 0.
class L1MedianInstance : public ConvexProblem {
 public:
  L1MedianInstance(std::vector<std::vector<double>> anchors) : anchors_(std::move(anchors)) {
    if (anchors_.empty()) throw Error(Errc::dimension_mismatch, "no anchors");
    d_ = static_cast<int>(anchors_[0].size());
    if (d_ <= 0) throw Error(Errc::dimension_mismatch, "zero-dimensional anchors");
    for (const auto& a : anchors_)
      if (static_cast<int>(a.size()) != d_)
        throw Error(Errc::dimension_mismatch, "ragged anchor rows");
    const int n = static_cast<int>(anchors_.size());
    lo_.resize(static_cast<std::size_t>(d_));
    hi_.resize(static_cast<std::size_t>(d_));
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int k = 0; k < d_; ++k) {
      for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = anchors_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      std::sort(col.begin(), col.end());
      if (n % 2 == 1) {
        lo_[static_cast<std::size_t>(k)] = hi_[static_cast<std::size_t>(k)] = col[static_cast<std::size_t>(n / 2)];
      } else {
        lo_[static_cast<std::size_t>(k)] = col[static_cast<std::size_t>(n / 2 - 1)];
        hi_[static_cast<std::size_t>(k)] = col[static_cast<std::size_t>(n / 2)];
      }
    }
  }

  /// Anchors drawn uniformly from box^d, one per agent.
  static L1MedianInstance seeded(int n, int d, std::uint64_t seed, double box_lo = -1.0,
                                 double box_hi = 1.0) {
    std::vector<std::vector<double>> anchors(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto rng = seeded_engine(seed, static_cast<std::uint64_t>(i));
      anchors[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(d));
      for (int k = 0; k < d; ++k)
        anchors[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = uniform(rng, box_lo, box_hi);
    }
    return L1MedianInstance(std::move(anchors));
  }

  int agents() const override { return static_cast<int>(anchors_.size()); }
  int dim() const override { return d_; }

  double cost(int agent, std::span<const double> x) const override {
    const auto& c = anchors_[static_cast<std::size_t>(agent)];
    double s = 0.0;
    for (int k = 0; k < d_; ++k) s += std::abs(x[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k)]);
    return s;
  }

  void subgradient(int agent, std::span<const double> x, std::span<double> g) const override {
    const auto& c = anchors_[static_cast<std::size_t>(agent)];
    for (int k = 0; k < d_; ++k) {
      const double diff = x[static_cast<std::size_t>(k)] - c[static_cast<std::size_t>(k)];
      g[static_cast<std::size_t>(k)] = diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0;
    }
  }

  double subgradient_bound(int) const override { return static_cast<double>(d_); }

  std::vector<double> minimizer() const override {
    std::vector<double> mid(static_cast<std::size_t>(d_));
    for (int k = 0; k < d_; ++k)
      mid[static_cast<std::size_t>(k)] = 0.5 * (lo_[static_cast<std::size_t>(k)] + hi_[static_cast<std::size_t>(k)]);
    return mid;
  }

  double distance_to_argmin(std::span<const double> x) const override {
    double d = 0.0;
    for (int k = 0; k < d_; ++k) {
      const double v = x[static_cast<std::size_t>(k)];
      const double away = std::max({0.0, lo_[static_cast<std::size_t>(k)] - v, v - hi_[static_cast<std::size_t>(k)]});
      d = std::max(d, away);
    }
    return d;
  }

  const std::vector<std::vector<double>>& anchors() const { return anchors_; }
  const std::vector<double>& argmin_lower() const { return lo_; }
  const std::vector<double>& argmin_upper() const { return hi_; }

 private:
  std::vector<std::vector<double>> anchors_;
  int d_ = 0;
  std::vector<double> lo_, hi_;
};

/// f_i(x) = |a_i^T x - b_i| for data rows (a_i, b_i). The minimizer comes from
/// the pattern-search oracle; instances with a flat argmin should be compared
/// through cost values rather than points.
class L1RegressionInstance : public ConvexProblem {
 public:
  /// rows[i] = (a_i[0..d-1], b_i).
  L1RegressionInstance(std::vector<std::vector<double>> rows) {
    if (rows.empty()) throw Error(Errc::dimension_mismatch, "no data rows");
    d_ = static_cast<int>(rows[0].size()) - 1;
    if (d_ <= 0) throw Error(Errc::dimension_mismatch, "rows need at least two columns");
    for (auto& r : rows) {
      if (static_cast<int>(r.size()) != d_ + 1)
        throw Error(Errc::dimension_mismatch, "ragged data rows");
      a_.emplace_back(r.begin(), r.end() - 1);
      b_.push_back(r.back());
    }
  }

  int agents() const override { return static_cast<int>(a_.size()); }
  int dim() const override { return d_; }

  double cost(int agent, std::span<const double> x) const override {
    return std::abs(residual(agent, x));
  }

  void subgradient(int agent, std::span<const double> x, std::span<double> g) const override {
    const double r = residual(agent, x);
    const double s = r > 0.0 ? 1.0 : r < 0.0 ? -1.0 : 0.0;
    const auto& a = a_[static_cast<std::size_t>(agent)];
    for (int k = 0; k < d_; ++k) g[static_cast<std::size_t>(k)] = s * a[static_cast<std::size_t>(k)];
  }

  double subgradient_bound(int agent) const override {
    double s = 0.0;
    for (double v : a_[static_cast<std::size_t>(agent)]) s += std::abs(v);
    return s;
  }

  std::vector<double> minimizer() const override {
    return pattern_search_minimizer(std::vector<double>(static_cast<std::size_t>(d_), 0.0));
  }

 private:
  double residual(int agent, std::span<const double> x) const {
    const auto& a = a_[static_cast<std::size_t>(agent)];
    double s = 0.0;
    for (int k = 0; k < d_; ++k) s += a[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    return s - b_[static_cast<std::size_t>(agent)];
  }

  std::vector<std::vector<double>> a_;
  std::vector<double> b_;
  int d_ = 0;
};

/// Randomized self-check of convexity, subgradient validity, and the bound
/// L_i; throws on violation. Samples pairs (x, y) in a box around the origin
/// and verifies f_i(y) >= f_i(x) + g_i(x)^T (y - x) - 1e-9 plus ||g||_1 <= L_i.
inline void problem_self_check(const ConvexProblem& p, int samples, std::uint64_t seed,
                               double box = 4.0) {
  const int d = p.dim();
  std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d)),
      g(static_cast<std::size_t>(d));
  for (int s = 0; s < samples; ++s) {
    auto rng = seeded_engine(seed, static_cast<std::uint64_t>(s));
    for (int k = 0; k < d; ++k) {
      x[static_cast<std::size_t>(k)] = uniform(rng, -box, box);
      y[static_cast<std::size_t>(k)] = uniform(rng, -box, box);
    }
    for (int i = 0; i < p.agents(); ++i) {
      p.subgradient(i, x, g);
      double g1 = 0.0, inner = 0.0;
      for (int k = 0; k < d; ++k) {
        g1 += std::abs(g[static_cast<std::size_t>(k)]);
        inner += g[static_cast<std::size_t>(k)] * (y[static_cast<std::size_t>(k)] - x[static_cast<std::size_t>(k)]);
      }
      if (g1 > p.subgradient_bound(i) + 1e-12)
        throw std::logic_error("subgradient bound violated for agent " + std::to_string(i));
      if (p.cost(i, y) < p.cost(i, x) + inner - 1e-9)
        throw std::logic_error("subgradient inequality violated for agent " + std::to_string(i));
    }
  }
}

}  // namespace subgrad
