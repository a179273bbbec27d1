#pragma once

// Fisher information for RSS cooperative localization, per-device CRLB
// covariance blocks, and confidence-ellipsoid neighbor sets.

#include "coloc/model.hpp"

#include <Eigen/Core>

#include <vector>

namespace coloc {

struct FimOptions {
  /// Sum the diagonal terms over blindfolded devices only, leaving anchors
  /// out entirely.  The resulting matrix is rank deficient and is only
  /// invertible through the ridge.
  bool strict_paper = false;
  /// Pairs missing from this matrix carry no information (optional).
  const RssMatrix* connectivity = nullptr;
};

/// 3N_t x 3N_t matrix ordered [x block, y block, z block].
struct FisherMatrix {
  Eigen::MatrixXd F;
  int num_blindfolded = 0;
};

using DeviceCovariance = Eigen::Matrix3d;

/// Geometry is taken from the install points (device k at install point k)
/// and anchors.  Throws DomainError for sigma == 0.
FisherMatrix fisher_information(const DeviceNetwork& network, const PathLossParams& params,
                                const FimOptions& options = {});

/// (10 gamma / (sigma ln 10))^2
double fisher_gain(const PathLossParams& params);

/// Inverse of F with a 1e-9 * trace / dim ridge applied when F is not
/// positive definite.  Throws UnlocalizableError if that still fails.
Eigen::MatrixXd crlb_inverse(const FisherMatrix& fim);

/// 3x3 block of F^-1 at rows/cols {i, i + N_t, i + 2 N_t}.
DeviceCovariance device_covariance(const FisherMatrix& fim, int device);
std::vector<DeviceCovariance> device_covariances(const FisherMatrix& fim);

/// Quantile of the chi-squared distribution with three degrees of freedom.
double chi2_quantile_3dof(double p);
double chi2_cdf_3dof(double q);

enum class NeighborMetric {
  Own,       // Mahalanobis distance under device i's own covariance block
  Pairwise,  // under Sigma_i + Sigma_j (covariance of the difference)
};

using NeighborSets = std::vector<std::vector<int>>;

/// N_i = { j != i : d^T Sigma^-1 d <= chi2_3(confidence) } with
/// d = p[perm[i]] - p[perm[j]].  `covariances` is indexed by install point,
/// so the covariance of device i is covariances[perm[i]].  Singular blocks are
/// ridge-regularized.
NeighborSets neighbor_sets(const Assignment& perm, const DeviceNetwork& network,
                           const std::vector<DeviceCovariance>& covariances, double confidence,
                           NeighborMetric metric = NeighborMetric::Own);

/// Same sets expressed over install points (perm = identity), with each
/// set sorted by increasing Mahalanobis distance.
NeighborSets position_neighbor_sets(const DeviceNetwork& network, const std::vector<DeviceCovariance>& covariances,
                                    double confidence, NeighborMetric metric = NeighborMetric::Own);

}  // namespace coloc
