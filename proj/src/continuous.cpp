#include "coloc/continuous.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>

namespace coloc {

namespace {

struct Pair {
  int i = 0;
  int j = 0;               // device index; >= nt means anchor
  double rss = 0.0;
  double range = 0.0;      // RSS-implied distance
};

std::vector<Pair> measured_pairs(const RssMatrix& rss, const DeviceNetwork& network,
                                 const PathLossParams& params) {
  if (rss.size() != network.num_devices())
    throw std::invalid_argument("RSS matrix size does not match network");
  RssMatrix sym = rss;
  sym.symmetrize();
  const int nt = network.num_blindfolded();
  const int n = network.num_devices();
  std::vector<Pair> pairs;
  for (int i = 0; i < nt; ++i)
    for (int j = i + 1; j < n; ++j)
      if (sym.measured(i, j)) pairs.push_back({i, j, sym.at(i, j), rss_to_distance(params, sym.at(i, j))});
  return pairs;
}

Position other_end(const Pair& p, const std::vector<Position>& pos, const DeviceNetwork& network) {
  const int nt = network.num_blindfolded();
  return p.j < nt ? pos[static_cast<std::size_t>(p.j)] : network.anchors[static_cast<std::size_t>(p.j - nt)];
}

// Every blindfolded device must reach an anchor through measured pairs.
void require_anchor_connected(const std::vector<Pair>& pairs, const DeviceNetwork& network) {
  const int nt = network.num_blindfolded();
  std::vector<int> parent(static_cast<std::size_t>(nt + 1));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const auto& p : pairs) {
    const int a = find(p.i);
    const int b = find(p.j < nt ? p.j : nt);  // node nt stands for all anchors
    parent[static_cast<std::size_t>(a)] = b;
  }
  for (int i = 0; i < nt; ++i)
    if (find(i) != find(nt))
      throw UnlocalizableError("device " + std::to_string(i) + " has no measurement path to an anchor");
}

std::vector<Position> unflatten(const Eigen::VectorXd& x) {
  std::vector<Position> out(static_cast<std::size_t>(x.size() / 3));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x.segment<3>(static_cast<Eigen::Index>(3 * k));
  return out;
}

Eigen::VectorXd flatten(const std::vector<Position>& pos) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(3 * pos.size()));
  for (std::size_t k = 0; k < pos.size(); ++k) x.segment<3>(static_cast<Eigen::Index>(3 * k)) = pos[k];
  return x;
}

// ---------------------------------------------------------------------------
// Minimax surrogate

struct SmoothMax {
  double value = 0.0;   // mu * log sum exp(r / mu)
  double max_ratio = 0.0;
};

class MinimaxProblem {
 public:
  MinimaxProblem(std::vector<Pair> pairs, const DeviceNetwork& network)
      : pairs_(std::move(pairs)), network_(network), nt_(network.num_blindfolded()) {}

  std::vector<double> ratios(const Eigen::VectorXd& x) const {
    std::vector<double> r(pairs_.size());
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const auto& p = pairs_[k];
      const Position d = x.segment<3>(3 * p.i) - endpoint(x, p.j);
      r[k] = d.squaredNorm() / (p.range * p.range);
    }
    return r;
  }

  static SmoothMax smooth(const std::vector<double>& r, double mu, std::vector<double>* weights) {
    const double m = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    if (weights) weights->resize(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double e = std::exp((r[k] - m) / mu);
      sum += e;
      if (weights) (*weights)[k] = e;
    }
    if (weights)
      for (double& w : *weights) w /= sum;
    return {m + mu * std::log(sum), m};
  }

  // Gradient of the smoothed maximum and the weighted graph Laplacian
  // (over blindfolded devices) of the same softmax weights.
  void gradient_and_laplacian(const Eigen::VectorXd& x, const std::vector<double>& w,
                              Eigen::VectorXd& grad, Eigen::MatrixXd& lap) const {
    grad.setZero(x.size());
    lap.setZero(nt_, nt_);
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      const auto& p = pairs_[k];
      const double c = w[k] / (p.range * p.range);
      const Position d = x.segment<3>(3 * p.i) - endpoint(x, p.j);
      grad.segment<3>(3 * p.i) += 2.0 * c * d;
      lap(p.i, p.i) += 2.0 * c;
      if (p.j < nt_) {
        grad.segment<3>(3 * p.j) -= 2.0 * c * d;
        lap(p.j, p.j) += 2.0 * c;
        lap(p.i, p.j) -= 2.0 * c;
        lap(p.j, p.i) -= 2.0 * c;
      }
    }
  }

 private:
  Position endpoint(const Eigen::VectorXd& x, int j) const {
    return j < nt_ ? Position(x.segment<3>(3 * j)) : network_.anchors[static_cast<std::size_t>(j - nt_)];
  }

  std::vector<Pair> pairs_;
  const DeviceNetwork& network_;
  int nt_;
};

// ---------------------------------------------------------------------------
// Least-squares RSS objective

constexpr double kLn10 = std::numbers::ln10;

double p2_value(const Eigen::VectorXd& x, const std::vector<Pair>& pairs, const DeviceNetwork& network,
                const PathLossParams& params) {
  const int nt = network.num_blindfolded();
  double f = 0.0;
  for (const auto& p : pairs) {
    const Position other = p.j < nt ? Position(x.segment<3>(3 * p.j)) : network.anchors[static_cast<std::size_t>(p.j - nt)];
    const double d = std::max((Position(x.segment<3>(3 * p.i)) - other).norm(), kMinPairDistance);
    const double e = params.p0 - 10.0 * params.gamma * std::log10(d / params.d0) - p.rss;
    f += e * e;
  }
  return f;
}

Eigen::VectorXd p2_grad(const Eigen::VectorXd& x, const std::vector<Pair>& pairs, const DeviceNetwork& network,
                        const PathLossParams& params) {
  const int nt = network.num_blindfolded();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  const double k = 10.0 * params.gamma / kLn10;
  for (const auto& p : pairs) {
    const Position other = p.j < nt ? Position(x.segment<3>(3 * p.j)) : network.anchors[static_cast<std::size_t>(p.j - nt)];
    const Position diff = Position(x.segment<3>(3 * p.i)) - other;
    const double d = std::max(diff.norm(), kMinPairDistance);
    const double e = params.p0 - 10.0 * params.gamma * std::log10(d / params.d0) - p.rss;
    // d e / d p_i = -k (p_i - p_j) / d^2
    const Position gi = -2.0 * e * k * diff / (d * d);
    g.segment<3>(3 * p.i) += gi;
    if (p.j < nt) g.segment<3>(3 * p.j) -= gi;
  }
  return g;
}

void require_no_coincident(const std::vector<Position>& positions, const std::vector<Pair>& pairs,
                           const DeviceNetwork& network) {
  for (const auto& p : pairs) {
    if ((positions[static_cast<std::size_t>(p.i)] - other_end(p, positions, network)).norm() == 0.0)
      throw DomainError("coincident positions for measured pair (" + std::to_string(p.i) + ", " +
                        std::to_string(p.j) + ")");
  }
}

}  // namespace

void SolverSettings::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("solver: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be > 0");
  if (!(smoothing > 0.0)) throw std::invalid_argument("solver: smoothing must be > 0");
  if (!(step.shrink > 0.0 && step.shrink < 1.0)) throw std::invalid_argument("solver: shrink must be in (0, 1)");
  if (!(step.initial_step > 0.0)) throw std::invalid_argument("solver: initial_step must be > 0");
}

// ---------------------------------------------------------------------------

PositionEstimate relaxed_init(const RssMatrix& rss, const DeviceNetwork& network, const PathLossParams& params,
                              const SolverSettings& settings) {
  settings.validate();
  params.validate();
  const int nt = network.num_blindfolded();
  if (network.anchors.empty()) throw UnlocalizableError("relaxed_init: no anchors");
  auto pairs = measured_pairs(rss, network, params);
  require_anchor_connected(pairs, network);

  // Anchor centroid plus small deterministic offsets to break symmetry.
  Position centroid = Position::Zero();
  for (const auto& a : network.anchors) centroid += a;
  centroid /= static_cast<double>(network.anchors.size());
  double extent = 0.0;
  for (const auto& a : network.anchors) extent = std::max(extent, (a - centroid).norm());
  const double offset = 0.01 * std::max(extent, 1.0);
  Eigen::VectorXd x(3 * nt);
  for (int i = 0; i < nt; ++i) {
    const double t = 2.399963229728653 * (i + 1);  // golden angle
    x.segment<3>(3 * i) = centroid + offset * Position(std::cos(t), std::sin(t), std::cos(0.5 * t + 1.0));
  }

  MinimaxProblem problem(pairs, network);
  const auto& rule = settings.step;
  std::vector<double> w;
  Eigen::VectorXd grad;
  Eigen::MatrixXd lap;
  int iter = 0;
  long long evals = 0;

  // Temperature annealed geometrically from 1 down to `smoothing`.
  for (double mu_rel = 1.0;; mu_rel = std::max(mu_rel * 0.1, settings.smoothing)) {
    const auto r0 = problem.ratios(x);
    const double mu = mu_rel * std::max(*std::max_element(r0.begin(), r0.end()), 1e-300);
    SmoothMax cur = MinimaxProblem::smooth(r0, mu, &w);
    ++evals;
    while (iter < settings.max_iterations) {
      ++iter;
      problem.gradient_and_laplacian(x, w, grad, lap);
      ++evals;
      const double ridge = 1e-12 * (lap.trace() / nt + 1e-300);
      lap.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(lap);
      Eigen::VectorXd dir(3 * nt);
      for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd gc(nt);
        for (int i = 0; i < nt; ++i) gc(i) = grad(3 * i + c);
        const Eigen::VectorXd dc = ldlt.solve(-gc);
        for (int i = 0; i < nt; ++i) dir(3 * i + c) = dc(i);
      }
      double slope = grad.dot(dir);
      if (!(slope < 0.0) || !dir.allFinite()) {
        dir = -grad;
        slope = -grad.squaredNorm();
      }
      if (slope == 0.0) break;

      double t = 1.0;
      bool accepted = false;
      SmoothMax trial;
      std::vector<double> trial_w;
      for (int b = 0; b <= rule.max_backtracks; ++b, t *= rule.shrink) {
        const Eigen::VectorXd xt = x + t * dir;
        trial = MinimaxProblem::smooth(problem.ratios(xt), mu, &trial_w);
        ++evals;
        if (trial.value <= cur.value + rule.armijo * t * slope) {
          x = xt;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      const double change = cur.value - trial.value;
      cur = trial;
      w.swap(trial_w);
      if (settings.trace) settings.trace(iter, std::sqrt(cur.max_ratio));
      if (change <= settings.tolerance * std::abs(cur.value)) break;
    }
    if (mu_rel <= settings.smoothing || iter >= settings.max_iterations) break;
  }

  PositionEstimate out;
  out.positions = unflatten(x);
  const auto r = problem.ratios(x);
  out.objective = std::sqrt(*std::max_element(r.begin(), r.end()));
  out.iterations = iter;
  out.evaluations = evals + 1;
  return out;
}

// ---------------------------------------------------------------------------

double p2_objective(const std::vector<Position>& positions, const RssMatrix& rss, const DeviceNetwork& network,
                    const PathLossParams& params) {
  if (static_cast<int>(positions.size()) != network.num_blindfolded())
    throw std::invalid_argument("p2_objective: position count does not match network");
  const auto pairs = measured_pairs(rss, network, params);
  require_no_coincident(positions, pairs, network);
  return p2_value(flatten(positions), pairs, network, params);
}

Eigen::VectorXd p2_gradient(const std::vector<Position>& positions, const RssMatrix& rss,
                            const DeviceNetwork& network, const PathLossParams& params) {
  if (static_cast<int>(positions.size()) != network.num_blindfolded())
    throw std::invalid_argument("p2_gradient: position count does not match network");
  const auto pairs = measured_pairs(rss, network, params);
  require_no_coincident(positions, pairs, network);
  return p2_grad(flatten(positions), pairs, network, params);
}

PositionEstimate refine_mle(const PositionEstimate& init, const RssMatrix& rss, const DeviceNetwork& network,
                            const PathLossParams& params, const SolverSettings& settings) {
  settings.validate();
  params.validate();
  const int nt = network.num_blindfolded();
  if (static_cast<int>(init.positions.size()) != nt)
    throw std::invalid_argument("refine_mle: initial estimate has the wrong number of positions");
  const auto pairs = measured_pairs(rss, network, params);

  std::vector<Position> start = init.positions;
  int jitter = 0;
  for (const auto& p : pairs) {
    auto& pi = start[static_cast<std::size_t>(p.i)];
    if ((pi - other_end(p, start, network)).norm() < kMinPairDistance) {
      const double t = 2.399963229728653 * (p.i + 1);
      pi += 1e-3 * Position(std::cos(t), std::sin(t), 0.5);
      ++jitter;
    }
  }
  if (jitter > 0) std::clog << "refine_mle: jittered " << jitter << " coincident pair(s)\n";

  const int dims = 3 * static_cast<int>(start.size());
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dims, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(dims, std::numeric_limits<double>::infinity());
  if (settings.clamp_to_install_box && !network.install_points.empty()) {
    Position box_lo = network.install_points.front();
    Position box_hi = box_lo;
    for (const Position& q : network.install_points) {
      box_lo = box_lo.cwiseMin(q);
      box_hi = box_hi.cwiseMax(q);
    }
    for (int i = 0; i < dims; i += 3) {
      lo.segment<3>(i) = box_lo;
      hi.segment<3>(i) = box_hi;
    }
  }
  const auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.cwiseMax(lo).cwiseMin(hi); };

  Eigen::VectorXd x = project(flatten(start));
  double f = p2_value(x, pairs, network, params);
  Eigen::VectorXd g = p2_grad(x, pairs, network, params);
  long long evals = 2;
  const auto& rule = settings.step;
  double alpha = rule.initial_step / std::max(1.0, g.norm());
  int iter = 0;

  while (iter < settings.max_iterations && f > 0.0) {
    if (!(g.squaredNorm() > 0.0)) break;
    ++iter;
    double t = alpha;
    bool accepted = false;
    Eigen::VectorXd xt;
    double ft = f;
    for (int b = 0; b <= rule.max_backtracks; ++b, t *= rule.shrink) {
      xt = project(x - t * g);
      const double decrease = g.dot(x - xt);
      if (!(decrease > 0.0)) break;
      ft = p2_value(xt, pairs, network, params);
      ++evals;
      if (ft <= f - rule.armijo * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Eigen::VectorXd gt = p2_grad(xt, pairs, network, params);
    ++evals;
    const Eigen::VectorXd s = xt - x;
    const Eigen::VectorXd y = gt - g;
    const double sy = s.dot(y);
    // Barzilai-Borwein trial step for the next iteration.
    alpha = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t;
    const double change = f - ft;
    x = xt;
    g = gt;
    f = ft;
    if (settings.trace) settings.trace(iter, f);
    if (change <= settings.tolerance * f) break;
  }

  PositionEstimate out;
  out.positions = unflatten(x);
  out.objective = f;
  out.iterations = iter;
  out.evaluations = evals;
  out.jitter_events = init.jitter_events + jitter;
  return out;
}

}  // namespace coloc
