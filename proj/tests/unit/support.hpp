#pragma once

#include "coloc/model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace coloc::testing {

/// Small 3-D network: `nt` install points and `na` anchors drawn uniformly in
/// a box, rejecting pairs closer than `min_gap`.
inline DeviceNetwork random_network(int nt, int na, std::mt19937_64& rng, double box = 6.0, double min_gap = 0.5) {
  std::uniform_real_distribution<double> u(0.0, box);
  std::vector<Position> pts;
  while (static_cast<int>(pts.size()) < nt + na) {
    Position p(u(rng), u(rng), u(rng) * 0.5);
    bool ok = true;
    for (const auto& q : pts) ok = ok && (p - q).norm() >= min_gap;
    if (ok) pts.push_back(p);
  }
  DeviceNetwork net;
  net.install_points.assign(pts.begin(), pts.begin() + nt);
  net.anchors.assign(pts.begin() + nt, pts.end());
  return net;
}

/// Exhaustive minimum of the permutation cost and the minimizer.
inline std::pair<double, Assignment> brute_force_minimum(const AssignmentCost& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.num_blindfolded()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> arg = perm;
  do {
    const double c = cost.total(Assignment(perm));
    if (c < best) {
      best = c;
      arg = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, Assignment(arg)};
}

inline int hamming(const Assignment& a, const Assignment& b) {
  int h = 0;
  for (int i = 0; i < a.size(); ++i) h += a[i] != b[i];
  return h;
}

}  // namespace coloc::testing
