#include "coloc/assign.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace coloc {

CostMatrix::CostMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw std::invalid_argument("CostMatrix: matrix must be square");
  if (!entries_.allFinite() || (entries_.size() > 0 && entries_.minCoeff() < 0.0))
    throw std::invalid_argument("CostMatrix: entries must be finite and non-negative");
}

double CostMatrix::total(const Assignment& perm) const {
  if (perm.size() != size()) throw std::invalid_argument("CostMatrix: assignment size mismatch");
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += entries_(i, perm[i]);
  return s;
}

CostMatrix build_cost_matrix(const PositionEstimate& estimates, const DeviceNetwork& network) {
  const int n = network.num_blindfolded();
  if (static_cast<int>(estimates.positions.size()) != n)
    throw std::invalid_argument("build_cost_matrix: estimate count does not match install point count");
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      c(i, j) = (estimates.positions[static_cast<std::size_t>(i)] - network.install_points[static_cast<std::size_t>(j)]).norm();
  return CostMatrix(std::move(c));
}

Assignment solve_assignment(const CostMatrix& cost) {
  const int n = cost.size();
  if (n == 0) return Assignment{};
  const auto& c = cost.entries();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting path Hungarian method, 1-based with a dummy column 0.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> owner(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = owner[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = c(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (owner[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      owner[static_cast<std::size_t>(j0)] = owner[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  // 0-based matching and the equality subgraph of the optimal duals.  Every
  // perfect matching inside that subgraph is optimal.
  std::vector<int> match(static_cast<std::size_t>(n)), col_owner(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    match[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)] - 1)] = j - 1;
    col_owner[static_cast<std::size_t>(j - 1)] = owner[static_cast<std::size_t>(j)] - 1;
  }
  const double eps = 1e-9 * (1.0 + c.cwiseAbs().maxCoeff());
  auto tight = [&](int i, int j) {
    return c(i, j) - u[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(j + 1)] <= eps;
  };

  // Fix rows in order, each to the smallest column that still admits a
  // perfect matching of the remaining rows in the equality subgraph.
  std::vector<char> fixed_col(static_cast<std::size_t>(n), 0);
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (fixed_col[static_cast<std::size_t>(j)] || !tight(i, j)) continue;
      const int current = match[static_cast<std::size_t>(i)];
      if (j == current) break;
      const int r = col_owner[static_cast<std::size_t>(j)];
      // Find an alternating path from row r to the column `current` freed by i.
      std::fill(visited.begin(), visited.end(), 0);
      visited[static_cast<std::size_t>(j)] = 1;
      std::function<bool(int)> augment = [&](int row) -> bool {
        for (int col = 0; col < n; ++col) {
          if (fixed_col[static_cast<std::size_t>(col)] || visited[static_cast<std::size_t>(col)] || !tight(row, col)) continue;
          visited[static_cast<std::size_t>(col)] = 1;
          if (col == current) {
            match[static_cast<std::size_t>(row)] = col;
            col_owner[static_cast<std::size_t>(col)] = row;
            return true;
          }
          const int next = col_owner[static_cast<std::size_t>(col)];
          if (next == i) continue;
          if (augment(next)) {
            match[static_cast<std::size_t>(row)] = col;
            col_owner[static_cast<std::size_t>(col)] = row;
            return true;
          }
        }
        return false;
      };
      if (augment(r)) {
        match[static_cast<std::size_t>(i)] = j;
        col_owner[static_cast<std::size_t>(j)] = i;
        break;
      }
    }
    fixed_col[static_cast<std::size_t>(match[static_cast<std::size_t>(i)])] = 1;
  }
  return Assignment(std::move(match));
}

}  // namespace coloc
