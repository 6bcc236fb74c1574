#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subgrad/matrix_sequence.hpp"
#include "subgrad/stochastic_matrix.hpp"

namespace subgrad {

/// Directed graph on vertices 0..n-1; edge list is kept sorted and duplicate
/// free. Self-loops are allowed.
struct DirectedGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  static DirectedGraph make(int n, std::vector<std::pair<int, int>> edges) {
    for (auto [u, v] : edges)
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw Error(Errc::dimension_mismatch, "edge endpoint outside [0, n)");
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return DirectedGraph{n, std::move(edges)};
  }
};

/// Edge (i, j) iff p_ij > 0. The threshold is exact zero: any positive entry,
/// however small, contributes an edge.
inline DirectedGraph graph_from_matrix(const StochasticMatrix& p) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < p.n(); ++i)
    for (int j = 0; j < p.n(); ++j)
      if (p(i, j) > 0.0) edges.emplace_back(i, j);
  return DirectedGraph::make(p.n(), std::move(edges));
}

namespace detail {

inline std::vector<bool> reachable(int n, const std::vector<std::vector<int>>& adj, int source) {
  std::vector<bool> seen(n, false);
  std::vector<int> stack{source};
  seen[source] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
  }
  return seen;
}

}  // namespace detail

/// True iff every vertex is reachable from every other. Decided by one search
/// from vertex 0 in the graph and one in its reverse.
inline bool strongly_connected(const DirectedGraph& g) {
  if (g.n <= 0) return false;
  if (g.n == 1) return true;
  std::vector<std::vector<int>> adj(g.n), radj(g.n);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    radj[v].push_back(u);
  }
  const auto fwd = detail::reachable(g.n, adj, 0);
  const auto bwd = detail::reachable(g.n, radj, 0);
  for (int v = 0; v < g.n; ++v)
    if (!fwd[v] || !bwd[v]) return false;
  return true;
}

/// Union of the support graphs of P(t), ..., P(t + window - 1).
inline DirectedGraph union_graph(const MatrixSequence& seq, long t, long window) {
  if (window <= 0) throw Error(Errc::time_order, "window must be positive");
  std::set<std::pair<int, int>> edges;
  for (long s = t; s < t + window; ++s) {
    const auto g = graph_from_matrix(seq.at(s));
    edges.insert(g.edges.begin(), g.edges.end());
  }
  return DirectedGraph::make(seq.n(), {edges.begin(), edges.end()});
}

inline std::string to_dot(const DirectedGraph& g) {
  std::ostringstream out;
  out << "digraph g {\n";
  for (int v = 0; v < g.n; ++v) out << "  " << v << ";\n";
  for (auto [u, v] : g.edges) out << "  " << u << " -> " << v << ";\n";
  out << "}\n";
  return out.str();
}

enum class Condition { a1, a1_prime, a1_star };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::a1: return "uniform-window product positivity";
    case Condition::a1_prime: return "positive diagonals + connected window unions";
    case Condition::a1_star: return "column forward-product positivity";
  }
  return "unknown";
}

/// Outcome of a condition check. `exact` is true when the sequence repeats
/// (constant/periodic) or is eventually constant, so probing a finite window
/// decides the condition for all t; otherwise the verdict holds on the probe
/// window only.
struct ConditionReport {
  Condition condition;
  bool holds = false;
  std::optional<long> witness_T;
  long probe_window = 0;
  bool exact = false;
  std::string failure_reason;
  std::optional<double> p_plus;
};

namespace detail {

// Start times whose windows must be probed, and whether that probe decides
// the property for every t.
inline std::pair<long, bool> effective_probe(const MatrixSequence& seq, long requested) {
  if (auto p = seq.declared_period()) return {*p, true};
  if (seq.rule() == MatrixSequence::Rule::explicit_hold) return {seq.prefix_length() + 1, true};
  return {std::max<long>(requested, 1), false};
}

}  // namespace detail

/// Searches for the smallest T <= T_max such that the backward product
/// P(t + T, t) is strictly positive for every probed start t, and records the
/// smallest positive entry seen on the probe as the p+ estimate.
inline ConditionReport check_A1(const MatrixSequence& seq, long T_max, long probe) {
  if (seq.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "condition is stated for row-stochastic sequences");
  if (T_max <= 0) throw Error(Errc::time_order, "T_max must be positive");
  auto [starts, exact] = detail::effective_probe(seq, probe);
  ConditionReport rep;
  rep.condition = Condition::a1;
  rep.probe_window = starts;
  rep.exact = exact;
  rep.p_plus = min_positive_entry(seq, starts - 1);
  std::vector<StochasticMatrix> acc(static_cast<std::size_t>(starts),
                                    StochasticMatrix::identity(seq.n()));
  for (long T = 1; T <= T_max; ++T) {
    bool all_positive = true;
    for (long t = 0; t < starts; ++t) {
      acc[static_cast<std::size_t>(t)] =
          multiply(seq.at(t + T - 1), acc[static_cast<std::size_t>(t)]);
      if (!acc[static_cast<std::size_t>(t)].strictly_positive()) all_positive = false;
    }
    if (all_positive) {
      rep.holds = true;
      rep.witness_T = T;
      return rep;
    }
  }
  rep.failure_reason = "no T <= " + std::to_string(T_max) +
                       " gives strictly positive products on the probe window";
  return rep;
}

/// Positive diagonals everywhere on the probe, positive entries bounded below,
/// and some window length t0 <= t0_max whose union graphs are all strongly
/// connected. witness_T reports that t0.
inline ConditionReport check_A1_prime(const MatrixSequence& seq, long t0_max, long probe) {
  if (seq.kind() == Stochasticity::column)
    throw Error(Errc::kind_mismatch, "condition is stated for row-stochastic sequences");
  if (t0_max <= 0) throw Error(Errc::time_order, "t0_max must be positive");
  auto [starts, exact] = detail::effective_probe(seq, probe);
  ConditionReport rep;
  rep.condition = Condition::a1_prime;
  rep.probe_window = starts;
  rep.exact = exact;
  rep.p_plus = min_positive_entry(seq, starts - 1);
  for (long t = 0; t < starts + t0_max; ++t) {
    const auto p = seq.at(t);
    for (int i = 0; i < p.n(); ++i)
      if (!(p(i, i) > 0.0)) {
        rep.failure_reason =
            "zero diagonal entry at t=" + std::to_string(t) + ", i=" + std::to_string(i);
        return rep;
      }
  }
  for (long t0 = 1; t0 <= t0_max; ++t0) {
    bool all_connected = true;
    for (long t = 0; t < starts && all_connected; ++t)
      if (!strongly_connected(union_graph(seq, t, t0))) all_connected = false;
    if (all_connected) {
      rep.holds = true;
      rep.witness_T = t0;
      return rep;
    }
  }
  rep.failure_reason = "no t0 <= " + std::to_string(t0_max) +
                       " with strongly connected window unions on the probe";
  return rep;
}

/// Column-stochastic analogue of the product-positivity condition: no zero
/// rows in any factor, and some T with A(t+T-1) ... A(t) strictly positive.
inline ConditionReport check_A1_star(const MatrixSequence& seq, long T_max, long probe) {
  if (seq.kind() != Stochasticity::column && seq.kind() != Stochasticity::doubly)
    throw Error(Errc::kind_mismatch, "condition is stated for column-stochastic sequences");
  if (T_max <= 0) throw Error(Errc::time_order, "T_max must be positive");
  auto [starts, exact] = detail::effective_probe(seq, probe);
  ConditionReport rep;
  rep.condition = Condition::a1_star;
  rep.probe_window = starts;
  rep.exact = exact;
  rep.p_plus = min_positive_entry(seq, starts - 1);
  for (long t = 0; t < starts + T_max; ++t) {
    const auto a = seq.at(t);
    for (int i = 0; i < a.n(); ++i) {
      bool zero_row = true;
      for (int j = 0; j < a.n() && zero_row; ++j)
        if (a(i, j) > 0.0) zero_row = false;
      if (zero_row) {
        rep.failure_reason = "zero row at t=" + std::to_string(t) + ", i=" + std::to_string(i);
        return rep;
      }
    }
  }
  std::vector<StochasticMatrix> acc(static_cast<std::size_t>(starts),
                                    StochasticMatrix::identity(seq.n()));
  for (long T = 1; T <= T_max; ++T) {
    bool all_positive = true;
    for (long t = 0; t < starts; ++t) {
      acc[static_cast<std::size_t>(t)] =
          multiply(seq.at(t + T - 1), acc[static_cast<std::size_t>(t)]);
      if (!acc[static_cast<std::size_t>(t)].strictly_positive()) all_positive = false;
    }
    if (all_positive) {
      rep.holds = true;
      rep.witness_T = T;
      return rep;
    }
  }
  rep.failure_reason = "no T <= " + std::to_string(T_max) +
                       " gives strictly positive forward products on the probe window";
  return rep;
}

/// Default probe sizes: the window-union condition is checked with
/// t0_max = n and the product condition with T_max = n^2, which dominates the
/// smallest primitivity exponent n^2 - 2n + 2.
struct ImplicationDemo {
  ConditionReport window_condition;   // diagonals + connected unions
  ConditionReport product_condition;  // uniform-window positivity
};

/// Runs both row-stochastic checks with defaults sized so that whenever the
/// window condition holds, the product condition must hold as well (a window
/// witness t0 yields a product witness T <= (n-1) t0).
inline ImplicationDemo implication_demo(const MatrixSequence& seq, long probe = 4) {
  const long n = seq.n();
  ImplicationDemo demo{check_A1_prime(seq, n, probe),
                      check_A1(seq, std::max<long>(n * n, (n - 1) * n), probe)};
  return demo;
}

}  // namespace subgrad
