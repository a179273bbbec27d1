#pragma once

// Log-distance path loss model, RSS measurements and the permutation cost.
//
// Device indexing used throughout the library: blindfolded devices occupy
// indices [0, N_t) and anchors [N_t, N_t + N_a).  Position-space indexing is
// the same, with install point q at index q.  Blindfolded device d sits at
// position index perm[d]; anchor device N_t + a always sits at N_t + a.

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coloc {

using Position = Eigen::Vector3d;

/// Thrown for inputs outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when the measurement graph cannot pin down absolute positions.
class UnlocalizableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PathLossParams {
  double p0 = -40.0;    // dBm at d0
  double gamma = 2.0;   // path-loss exponent
  double d0 = 1.0;      // meters
  double sigma = 0.0;   // shadowing std-dev, dB

  void validate() const;
};

/// Ideal received power at distance d (meters).
double ideal_rss(const PathLossParams& params, double d);

/// Inverse of ideal_rss: the distance at which the model predicts `rss`.
double rss_to_distance(const PathLossParams& params, double rss);

class Assignment {
 public:
  Assignment() = default;
  /// Throws std::invalid_argument unless `perm` is a bijection on [0, n).
  explicit Assignment(std::vector<int> perm);

  static Assignment identity(int n);

  int size() const { return static_cast<int>(perm_.size()); }
  int operator[](int device) const { return perm_[static_cast<std::size_t>(device)]; }
  const std::vector<int>& perm() const { return perm_; }

  /// inverse()[q] is the device placed at install point q.
  std::vector<int> inverse() const;

  /// Returns a copy where devices[k] is moved to targets[k].  The caller
  /// guarantees that the result is still a bijection.
  Assignment with_moves(std::span<const int> devices, std::span<const int> targets) const;

  static bool is_bijection(const std::vector<int>& perm);

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<int> perm_;
};

struct DeviceNetwork {
  std::vector<Position> anchors;
  std::vector<Position> install_points;

  int num_blindfolded() const { return static_cast<int>(install_points.size()); }
  int num_anchors() const { return static_cast<int>(anchors.size()); }
  int num_devices() const { return num_blindfolded() + num_anchors(); }

  /// Position-space lookup: install points first, then anchors.
  const Position& position(int index) const;

  /// Physical location of every device (blindfolded devices placed per `perm`).
  std::vector<Position> device_positions(const Assignment& perm) const;

  /// Throws DomainError on non-finite or coincident positions, or N_t < 1.
  void validate() const;
};

/// Pairwise RSS in dBm; diagonal and unmeasured pairs hold a NaN marker.
class RssMatrix {
 public:
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  RssMatrix() = default;
  explicit RssMatrix(int n);

  int size() const { return n_; }
  bool measured(int i, int j) const;
  double at(int i, int j) const { return data_[index(i, j)]; }
  void set(int i, int j, double dbm);
  void clear(int i, int j) { data_[index(i, j)] = kMissing; }

  /// Averages (i,j) with (j,i) where both exist; copies the one that does otherwise.
  void symmetrize();
  bool is_symmetric() const;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }

  int n_ = 0;
  std::vector<double> data_;
};

/// Draws one shadowed measurement per unordered device pair with the
/// blindfolded devices at their true install points.
RssMatrix simulate_measurements(const DeviceNetwork& network, const Assignment& truth,
                                const PathLossParams& params, std::uint64_t seed);

/// Precomputed evaluator for the MLE permutation cost.
///
/// Sums squared residuals over blindfolded/blindfolded and
/// blindfolded/anchor pairs; anchor/anchor pairs and missing entries are
/// skipped.  `terms_evaluated()` counts pair residuals computed so far and is
/// the unit used for deterministic search budgets.
class AssignmentCost {
 public:
  AssignmentCost(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params);

  int num_blindfolded() const { return nt_; }
  int num_devices() const { return n_; }

  double total(const Assignment& perm) const;

  /// cost(base with devices[k] -> targets[k]) - cost(base).  `devices` must
  /// be distinct and the moved targets must be a rearrangement of the
  /// positions those devices held.
  double move_delta(const Assignment& base, std::span<const int> devices,
                    std::span<const int> targets) const;

  /// Number of measured pairs entering a full evaluation.
  std::int64_t terms_per_evaluation() const { return terms_per_eval_; }
  std::uint64_t terms_evaluated() const { return terms_; }
  /// terms_evaluated() expressed in full-cost evaluations.
  double evaluations() const;

 private:
  double term(int dev_a, int pos_a, int dev_b, int pos_b) const;

  int nt_ = 0;
  int n_ = 0;
  std::vector<double> ideal_;  // position-space, n_ x n_
  std::vector<double> rss_;    // device-space, n_ x n_
  std::int64_t terms_per_eval_ = 0;
  mutable std::uint64_t terms_ = 0;
};

double mle_cost(const Assignment& perm, const RssMatrix& rss, const DeviceNetwork& network,
                const PathLossParams& params);

/// Least-squares fit of rss = p0 - 10 gamma log10(d / d0) with d0 = 1 m;
/// sigma is the residual standard deviation (divisor N - 2, zero for two points).
PathLossParams fit_path_loss(std::span<const std::pair<double, double>> samples);

}  // namespace coloc
