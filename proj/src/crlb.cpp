#include "coloc/crlb.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

namespace coloc {

double fisher_gain(const PathLossParams& params) {
  const double g = 10.0 * params.gamma / (params.sigma * std::numbers::ln10);
  return g * g;
}

FisherMatrix fisher_information(const DeviceNetwork& network, const PathLossParams& params,
                                const FimOptions& options) {
  params.validate();
  if (!(params.sigma > 0.0)) throw DomainError("fisher_information: sigma must be positive");
  const int nt = network.num_blindfolded();
  const int n = options.strict_paper ? nt : network.num_devices();
  if (options.connectivity && options.connectivity->size() != network.num_devices())
    throw std::invalid_argument("fisher_information: connectivity matrix size mismatch");
  const double gc = fisher_gain(params);

  FisherMatrix out;
  out.num_blindfolded = nt;
  out.F = Eigen::MatrixXd::Zero(3 * nt, 3 * nt);
  auto& F = out.F;
  for (int k = 0; k < nt; ++k) {
    const Position& pk = network.position(k);
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      if (options.connectivity && !options.connectivity->measured(k, i) && !options.connectivity->measured(i, k))
        continue;
      const Position diff = pk - network.position(i);
      const double d2 = diff.squaredNorm();
      if (!(d2 > 0.0)) throw DomainError("fisher_information: coincident positions");
      const Eigen::Matrix3d block = gc * diff * diff.transpose() / (d2 * d2);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          F(a * nt + k, b * nt + k) += block(a, b);
          if (i < nt) F(a * nt + k, b * nt + i) -= block(a, b);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd crlb_inverse(const FisherMatrix& fim) {
  const auto dim = fim.F.rows();
  Eigen::MatrixXd F = 0.5 * (fim.F + fim.F.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(F);
  if (llt.info() != Eigen::Success) {
    const double ridge = 1e-9 * F.trace() / static_cast<double>(std::max<Eigen::Index>(dim, 1));
    F.diagonal().array() += ridge;
    llt.compute(F);
    if (llt.info() != Eigen::Success || !(ridge > 0.0))
      throw UnlocalizableError("Fisher information is singular; geometry is not localizable");
  }
  return llt.solve(Eigen::MatrixXd::Identity(dim, dim));
}

namespace {

DeviceCovariance block_of(const Eigen::MatrixXd& inv, int nt, int i) {
  DeviceCovariance s;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) s(a, b) = inv(a * nt + i, b * nt + i);
  return 0.5 * (s + s.transpose());
}

// Inverse of a 3x3 covariance, ridge-regularized when singular.
Eigen::Matrix3d precision_of(const DeviceCovariance& s) {
  Eigen::LLT<Eigen::Matrix3d> llt(s);
  if (llt.info() == Eigen::Success) return llt.solve(Eigen::Matrix3d::Identity());
  const double ridge = std::max(1e-9 * s.trace() / 3.0, 1e-300);
  std::clog << "neighbor_sets: singular covariance block, applying ridge " << ridge << '\n';
  Eigen::Matrix3d r = s;
  r.diagonal().array() += ridge;
  llt.compute(r);
  if (llt.info() != Eigen::Success) throw UnlocalizableError("covariance block is not positive definite");
  return llt.solve(Eigen::Matrix3d::Identity());
}

}  // namespace

DeviceCovariance device_covariance(const FisherMatrix& fim, int device) {
  if (device < 0 || device >= fim.num_blindfolded) throw std::out_of_range("device_covariance: bad device index");
  return block_of(crlb_inverse(fim), fim.num_blindfolded, device);
}

std::vector<DeviceCovariance> device_covariances(const FisherMatrix& fim) {
  const auto inv = crlb_inverse(fim);
  std::vector<DeviceCovariance> out;
  out.reserve(static_cast<std::size_t>(fim.num_blindfolded));
  for (int i = 0; i < fim.num_blindfolded; ++i) out.push_back(block_of(inv, fim.num_blindfolded, i));
  return out;
}

// ---------------------------------------------------------------------------

double chi2_cdf_3dof(double q) {
  if (!(q > 0.0)) return 0.0;
  return std::erf(std::sqrt(0.5 * q)) - std::sqrt(2.0 * q / std::numbers::pi) * std::exp(-0.5 * q);
}

double chi2_quantile_3dof(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_quantile_3dof: p must lie in (0, 1)");
  double lo = 0.0, hi = 8.0;
  while (chi2_cdf_3dof(hi) < p) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf_3dof(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

NeighborSets position_neighbor_sets(const DeviceNetwork& network, const std::vector<DeviceCovariance>& covariances,
                                    double confidence, NeighborMetric metric) {
  const int nt = network.num_blindfolded();
  if (static_cast<int>(covariances.size()) != nt)
    throw std::invalid_argument("neighbor_sets: one covariance per install point is required");
  const double q = chi2_quantile_3dof(confidence);

  std::vector<Eigen::Matrix3d> precision;
  if (metric == NeighborMetric::Own) {
    precision.reserve(covariances.size());
    for (const auto& s : covariances) precision.push_back(precision_of(s));
  }

  NeighborSets out(static_cast<std::size_t>(nt));
  for (int a = 0; a < nt; ++a) {
    std::vector<std::pair<double, int>> hits;
    for (int b = 0; b < nt; ++b) {
      if (a == b) continue;
      const Position d = network.install_points[static_cast<std::size_t>(a)] - network.install_points[static_cast<std::size_t>(b)];
      const Eigen::Matrix3d P = metric == NeighborMetric::Own
                                    ? precision[static_cast<std::size_t>(a)]
                                    : precision_of(covariances[static_cast<std::size_t>(a)] + covariances[static_cast<std::size_t>(b)]);
      const double m2 = d.dot(P * d);
      if (m2 <= q) hits.emplace_back(m2, b);
    }
    std::sort(hits.begin(), hits.end());
    for (const auto& h : hits) out[static_cast<std::size_t>(a)].push_back(h.second);
  }
  return out;
}

NeighborSets neighbor_sets(const Assignment& perm, const DeviceNetwork& network,
                           const std::vector<DeviceCovariance>& covariances, double confidence, NeighborMetric metric) {
  if (perm.size() != network.num_blindfolded()) throw std::invalid_argument("neighbor_sets: assignment size mismatch");
  const auto by_position = position_neighbor_sets(network, covariances, confidence, metric);
  const auto owner = perm.inverse();
  NeighborSets out(static_cast<std::size_t>(perm.size()));
  for (int i = 0; i < perm.size(); ++i) {
    for (int q : by_position[static_cast<std::size_t>(perm[i])]) out[static_cast<std::size_t>(i)].push_back(owner[static_cast<std::size_t>(q)]);
    std::sort(out[static_cast<std::size_t>(i)].begin(), out[static_cast<std::size_t>(i)].end());
  }
  return out;
}

}  // namespace coloc
