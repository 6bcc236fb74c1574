#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "subgrad/stochastic_matrix.hpp"

namespace fixtures {

// Primitive 4-state chain with an all-zero diagonal; its first strictly
// positive power is P^6. Stationary vector (0.2, 0.2, 0.4, 0.2).
inline subgrad::StochasticMatrix zero_diagonal_primitive4() {
  return subgrad::validate({{0.0, 1.0, 0.0, 0.0},
                            {0.0, 0.0, 1.0, 0.0},
                            {0.5, 0.0, 0.0, 0.5},
                            {0.0, 0.0, 1.0, 0.0}},
                           subgrad::Stochasticity::row);
}

inline subgrad::StochasticMatrix lazy_uniform4() {
  std::vector<std::vector<double>> rows(4, std::vector<double>(4, 0.125));
  for (int i = 0; i < 4; ++i) rows[i][i] = 0.625;
  return subgrad::validate(rows, subgrad::Stochasticity::doubly);
}

// Left Perron vector by dense linear solve, independent of the power
// iteration under test.
inline std::vector<double> stationary_oracle(const subgrad::StochasticMatrix& p) {
  const int n = p.n();
  Eigen::MatrixXd a(n + 1, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(j, i) = p(i, j) - (i == j ? 1.0 : 0.0);
  for (int i = 0; i < n; ++i) a(n, i) = 1.0;
  b(n) = 1.0;
  Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  return std::vector<double>(x.data(), x.data() + n);
}

// Reachability closure by Floyd-Warshall, independent of the BFS used in the
// library.
inline bool strongly_connected_oracle(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) reach[i][j] = i == j || rows[i][j] > 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

// First power of P with every entry strictly positive, by naive column-major
// products; 0 if none exists up to t_max.
inline int first_positive_power_oracle(const subgrad::StochasticMatrix& p, int t_max) {
  const int n = p.n();
  std::vector<double> acc(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i) * n + i] = 1.0;
  for (int t = 1; t <= t_max; ++t) {
    std::vector<double> next(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          next[static_cast<std::size_t>(i) * n + j] +=
              acc[static_cast<std::size_t>(i) * n + k] * p(k, j);
    acc = next;
    bool positive = true;
    for (double v : acc)
      if (!(v > 0.0)) positive = false;
    if (positive) return t;
  }
  return 0;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const subgrad::StochasticMatrix& a, const subgrad::StochasticMatrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.n(); ++i)
    for (int j = 0; j < a.n(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace fixtures
