#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invfeat/errors.hpp"

namespace invfeat {

/// Minimum-cost perfect matching on a square cost matrix via the Hungarian
/// algorithm with potentials (shortest augmenting paths), O(n^3).
/// Returns the optimal total cost; row_of_col[j] = row matched to column j
/// when a non-null pointer is passed.
inline double solve_assignment(const Eigen::MatrixXd& cost,
                               std::vector<int>* row_of_col = nullptr) {
  if (cost.rows() != cost.cols() || cost.rows() < 1)
    throw ArgumentError("solve_assignment: need a square cost matrix");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();

  // 1-indexed working arrays; column 0 is the virtual start of each path.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  if (row_of_col) row_of_col->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    total += cost(match[j] - 1, j - 1);
    if (row_of_col) (*row_of_col)[j - 1] = match[j] - 1;
  }
  return total;
}

}  // namespace invfeat
