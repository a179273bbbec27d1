#include "coloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace coloc {

void PathLossParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("path loss: gamma must be > 0");
  if (!(d0 > 0.0) || !std::isfinite(d0)) throw DomainError("path loss: d0 must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("path loss: sigma must be >= 0");
  if (!std::isfinite(p0)) throw DomainError("path loss: p0 must be finite");
}

double ideal_rss(const PathLossParams& params, double d) {
  if (!(d > 0.0)) throw DomainError("ideal_rss: distance must be positive");
  return params.p0 - 10.0 * params.gamma * std::log10(d / params.d0);
}

double rss_to_distance(const PathLossParams& params, double rss) {
  return params.d0 * std::pow(10.0, (params.p0 - rss) / (10.0 * params.gamma));
}

// ---------------------------------------------------------------------------

Assignment::Assignment(std::vector<int> perm) : perm_(std::move(perm)) {
  if (!is_bijection(perm_)) throw std::invalid_argument("assignment is not a permutation");
}

Assignment Assignment::identity(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return Assignment(std::move(p));
}

bool Assignment::is_bijection(const std::vector<int>& perm) {
  std::vector<char> seen(perm.size(), 0);
  for (int v : perm) {
    if (v < 0 || static_cast<std::size_t>(v) >= perm.size() || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

std::vector<int> Assignment::inverse() const {
  std::vector<int> inv(perm_.size());
  for (std::size_t d = 0; d < perm_.size(); ++d) inv[static_cast<std::size_t>(perm_[d])] = static_cast<int>(d);
  return inv;
}

Assignment Assignment::with_moves(std::span<const int> devices, std::span<const int> targets) const {
  Assignment out = *this;
  for (std::size_t k = 0; k < devices.size(); ++k) out.perm_[static_cast<std::size_t>(devices[k])] = targets[k];
  return out;
}

// ---------------------------------------------------------------------------

const Position& DeviceNetwork::position(int index) const {
  const int nt = num_blindfolded();
  return index < nt ? install_points[static_cast<std::size_t>(index)]
                    : anchors[static_cast<std::size_t>(index - nt)];
}

std::vector<Position> DeviceNetwork::device_positions(const Assignment& perm) const {
  std::vector<Position> out;
  out.reserve(static_cast<std::size_t>(num_devices()));
  for (int d = 0; d < num_blindfolded(); ++d) out.push_back(install_points[static_cast<std::size_t>(perm[d])]);
  for (const auto& a : anchors) out.push_back(a);
  return out;
}

void DeviceNetwork::validate() const {
  if (install_points.empty()) throw DomainError("network: at least one install point is required");
  const int n = num_devices();
  for (int i = 0; i < n; ++i) {
    if (!position(i).allFinite()) throw DomainError("network: non-finite coordinate");
    for (int j = i + 1; j < n; ++j) {
      if (!((position(i) - position(j)).norm() > 0.0)) {
        std::ostringstream msg;
        msg << "network: coincident positions at indices " << i << " and " << j;
        throw DomainError(msg.str());
      }
    }
  }
}

// ---------------------------------------------------------------------------

RssMatrix::RssMatrix(int n)
    : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), kMissing) {
  if (n < 0) throw std::invalid_argument("RssMatrix: negative size");
}

bool RssMatrix::measured(int i, int j) const { return i != j && !std::isnan(data_[index(i, j)]); }

void RssMatrix::set(int i, int j, double dbm) {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw std::out_of_range("RssMatrix: index out of range");
  if (i == j) throw std::invalid_argument("RssMatrix: diagonal entries are undefined");
  if (!std::isfinite(dbm)) throw std::invalid_argument("RssMatrix: measurement must be finite");
  data_[index(i, j)] = dbm;
}

void RssMatrix::symmetrize() {
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      const double a = data_[index(i, j)];
      const double b = data_[index(j, i)];
      double v = kMissing;
      if (!std::isnan(a) && !std::isnan(b)) v = 0.5 * (a + b);
      else if (!std::isnan(a)) v = a;
      else if (!std::isnan(b)) v = b;
      data_[index(i, j)] = v;
      data_[index(j, i)] = v;
    }
  }
}

bool RssMatrix::is_symmetric() const {
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      const double a = data_[index(i, j)];
      const double b = data_[index(j, i)];
      if (std::isnan(a) != std::isnan(b)) return false;
      if (!std::isnan(a) && a != b) return false;
    }
  }
  return true;
}

RssMatrix simulate_measurements(const DeviceNetwork& network, const Assignment& truth,
                                const PathLossParams& params, std::uint64_t seed) {
  params.validate();
  if (truth.size() != network.num_blindfolded())
    throw std::invalid_argument("simulate_measurements: assignment size does not match network");
  const auto pos = network.device_positions(truth);
  const int n = network.num_devices();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  RssMatrix rss(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = (pos[static_cast<std::size_t>(i)] - pos[static_cast<std::size_t>(j)]).norm();
      if (!(d > 0.0)) throw DomainError("simulate_measurements: coincident device positions");
      // One draw per unordered pair keeps the stream layout independent of sigma.
      const double eps = params.sigma * noise(rng);
      const double v = ideal_rss(params, d) + eps;
      rss.set(i, j, v);
      rss.set(j, i, v);
    }
  }
  return rss;
}

// ---------------------------------------------------------------------------

AssignmentCost::AssignmentCost(const RssMatrix& rss, const DeviceNetwork& network,
                               const PathLossParams& params)
    : nt_(network.num_blindfolded()), n_(network.num_devices()) {
  params.validate();
  if (rss.size() != n_) throw std::invalid_argument("AssignmentCost: RSS matrix size does not match network");
  RssMatrix sym = rss;
  sym.symmetrize();
  const auto un = static_cast<std::size_t>(n_);
  ideal_.assign(un * un, 0.0);
  rss_.assign(un * un, RssMatrix::kMissing);
  for (int a = 0; a < n_; ++a) {
    for (int b = 0; b < n_; ++b) {
      if (a == b) continue;
      const double d = (network.position(a) - network.position(b)).norm();
      if (!(d > 0.0)) throw DomainError("AssignmentCost: coincident positions");
      ideal_[static_cast<std::size_t>(a) * un + static_cast<std::size_t>(b)] = ideal_rss(params, d);
      if (sym.measured(a, b)) rss_[static_cast<std::size_t>(a) * un + static_cast<std::size_t>(b)] = sym.at(a, b);
    }
  }
  for (int i = 0; i < nt_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if (sym.measured(i, j)) ++terms_per_eval_;
}

double AssignmentCost::term(int dev_a, int pos_a, int dev_b, int pos_b) const {
  const auto un = static_cast<std::size_t>(n_);
  const double r = rss_[static_cast<std::size_t>(dev_a) * un + static_cast<std::size_t>(dev_b)];
  if (std::isnan(r)) return 0.0;
  const double e = ideal_[static_cast<std::size_t>(pos_a) * un + static_cast<std::size_t>(pos_b)] - r;
  return e * e;
}

double AssignmentCost::total(const Assignment& perm) const {
  if (perm.size() != nt_) throw std::invalid_argument("AssignmentCost: assignment size mismatch");
  double c = 0.0;
  for (int i = 0; i < nt_; ++i) {
    const int pi = perm[i];
    for (int j = i + 1; j < n_; ++j) c += term(i, pi, j, j < nt_ ? perm[j] : j);
  }
  terms_ += static_cast<std::uint64_t>(terms_per_eval_);
  return c;
}

double AssignmentCost::move_delta(const Assignment& base, std::span<const int> devices,
                                  std::span<const int> targets) const {
  const std::size_t m = devices.size();
  double delta = 0.0;
  std::uint64_t counted = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const int d = devices[k];
    const int old_pos = base[d];
    const int new_pos = targets[k];
    for (int j = 0; j < n_; ++j) {
      if (j == d) continue;
      // Pairs inside the moved set are handled below, once each.
      if (j < nt_ && std::find(devices.begin(), devices.end(), j) != devices.end()) continue;
      const int pj = j < nt_ ? base[j] : j;
      delta += term(d, new_pos, j, pj) - term(d, old_pos, j, pj);
      ++counted;
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      delta += term(devices[a], targets[a], devices[b], targets[b]) -
               term(devices[a], base[devices[a]], devices[b], base[devices[b]]);
      ++counted;
    }
  }
  terms_ += counted;
  return delta;
}

double AssignmentCost::evaluations() const {
  return terms_per_eval_ > 0 ? static_cast<double>(terms_) / static_cast<double>(terms_per_eval_) : 0.0;
}

double mle_cost(const Assignment& perm, const RssMatrix& rss, const DeviceNetwork& network,
                const PathLossParams& params) {
  return AssignmentCost(rss, network, params).total(perm);
}

// ---------------------------------------------------------------------------

PathLossParams fit_path_loss(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 2) throw DomainError("fit_path_loss: at least two samples are required");
  const double n = static_cast<double>(samples.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [d, r] : samples) {
    if (!(d > 0.0) || !std::isfinite(r)) throw DomainError("fit_path_loss: invalid sample");
    sx += std::log10(d);
    sy += r;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [d, r] : samples) {
    const double x = std::log10(d) - mx;
    sxx += x * x;
    sxy += x * (r - my);
  }
  if (!(sxx > 1e-24)) throw DomainError("fit_path_loss: rank deficient (all distances equal)");
  const double slope = sxy / sxx;

  PathLossParams out;
  out.d0 = 1.0;
  out.gamma = -slope / 10.0;
  out.p0 = my - slope * mx;
  double ss = 0.0;
  for (const auto& [d, r] : samples) {
    const double e = r - (out.p0 + slope * std::log10(d));
    ss += e * e;
  }
  out.sigma = samples.size() > 2 ? std::sqrt(ss / (n - 2.0)) : 0.0;
  return out;
}

}  // namespace coloc
