#pragma once

#include "coloc/continuous.hpp"
#include "coloc/model.hpp"

#include <Eigen/Core>

namespace coloc {

/// Square matrix of non-negative finite costs; entry (i, j) is the cost of
/// giving row i column j.
class CostMatrix {
 public:
  explicit CostMatrix(Eigen::MatrixXd entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  /// Sum of entry(i, perm[i]).
  double total(const Assignment& perm) const;

 private:
  Eigen::MatrixXd entries_;
};

/// entry(i, j) = distance from estimate i to install point j.
CostMatrix build_cost_matrix(const PositionEstimate& estimates, const DeviceNetwork& network);

/// Minimum-cost perfect matching (Kuhn-Munkres with potentials).  Among
/// optimal matchings the lexicographically smallest permutation is returned.
Assignment solve_assignment(const CostMatrix& cost);

}  // namespace coloc
